//! EPnP: every reference point is written as a barycentric combination of a
//! few control points, which turns the pose problem into finding the camera
//! coordinates of those control points. They lie in the near null space of
//! a linear system built from the image measurements; the null-space
//! weights come from preserving inter-control-point distances.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use super::camera::{CameraModel, MarkerImage};
use super::VisionError;
use crate::spatial::{Mat3, Pose, RotationMatrix, Vec3};

/// Camera-frame pose of the marker frame plus fit quality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnpSolution {
    /// Marker frame to Σ_C.
    pub pose: Pose,
    /// Root-mean-square reprojection error over the used points, px.
    pub reprojection_rms: f64,
    /// Number of null-space vectors in the chosen solution.
    pub null_dimension: usize,
}

struct ControlFrame {
    points: Vec<Vec3>,
    /// One row of barycentric weights per reference point.
    alphas: Vec<Vec<f64>>,
}

/// Centroid plus principal directions scaled by the point spread. Planar
/// sets get three control points.
fn control_frame(points: &[Vec3]) -> Result<ControlFrame, VisionError> {
    let n = points.len() as f64;
    let c0 = points.iter().sum::<Vec3>() / n;
    let cov = points.iter().fold(Mat3::zeros(), |acc, p| {
        let d = p - c0;
        acc + d * d.transpose()
    }) / n;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    if !(largest > 0.0) || eig.eigenvalues[order[1]] <= 1e-10 * largest {
        return Err(VisionError::DegenerateConfiguration);
    }
    let planar = eig.eigenvalues[order[2]] <= 1e-10 * largest;
    let dims = if planar { 2 } else { 3 };

    let mut cps = vec![c0];
    for &k in order.iter().take(dims) {
        let dir: Vec3 = eig.eigenvectors.column(k).into_owned();
        cps.push(c0 + dir * eig.eigenvalues[k].sqrt());
    }

    // barycentric weights: p - c0 = sum_j a_j (c_j - c0)
    let mut basis = DMatrix::<f64>::zeros(3, dims);
    for j in 0..dims {
        basis.set_column(j, &(cps[j + 1] - c0));
    }
    let solver = SVD::new(basis, true, true);
    let alphas = points
        .iter()
        .map(|p| {
            let rhs = DMatrix::from_column_slice(3, 1, (p - c0).as_slice());
            let a = solver.solve(&rhs, 1e-12).expect("basis has full column rank");
            let mut row = vec![1.0 - a.sum()];
            row.extend(a.iter().copied());
            row
        })
        .collect();
    Ok(ControlFrame { points: cps, alphas })
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            out.push((a, b));
        }
    }
    out
}

/// Rigid alignment `dst = R src + t` in the least-squares sense.
fn procrustes(src: &[Vec3], dst: &[Vec3]) -> Pose {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vec3>() / n;
    let cd = dst.iter().sum::<Vec3>() / n;
    let h = src.iter().zip(dst).fold(Mat3::zeros(), |acc, (s, d)| {
        acc + (d - cd) * (s - cs).transpose()
    });
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        let k = svd.singular_values.imin();
        u.column_mut(k).neg_mut();
        r = u * v_t;
    }
    let rotation = RotationMatrix::from_matrix_unchecked(r);
    Pose::new(rotation, cd - rotation * cs)
}

fn reprojection_rms(pose: &Pose, world: &[Vec3], images: &[MarkerImage], cam: &CameraModel) -> f64 {
    let sq: f64 = world
        .iter()
        .zip(images)
        .map(|(p, im)| {
            let c = pose.apply(p);
            if c.z <= 0.0 {
                return 1e12;
            }
            let u = cam.fx * c.x / c.z + cam.cx - im.pixel.x;
            let v = cam.fy * c.y / c.z + cam.cy - im.pixel.y;
            u * u + v * v
        })
        .sum();
    (sq / world.len() as f64).sqrt()
}

struct NullSpace {
    /// Null vectors, each holding the stacked camera coordinates of the
    /// control points.
    vectors: Vec<DVector<f64>>,
    n_cp: usize,
}

impl NullSpace {
    fn control_delta(&self, v: usize, (a, b): (usize, usize)) -> Vec3 {
        let x = &self.vectors[v];
        Vec3::new(x[3 * a] - x[3 * b], x[3 * a + 1] - x[3 * b + 1], x[3 * a + 2] - x[3 * b + 2])
    }

    fn combine(&self, betas: &[f64]) -> Vec<Vec3> {
        (0..self.n_cp)
            .map(|j| {
                betas.iter().enumerate().fold(Vec3::zeros(), |acc, (i, b)| {
                    let x = &self.vectors[i];
                    acc + Vec3::new(x[3 * j], x[3 * j + 1], x[3 * j + 2]) * *b
                })
            })
            .collect()
    }
}

/// Linearised distance constraints: unknowns are the products
/// `beta_i beta_j` (i <= j) over the first `n` null vectors.
fn initial_betas(ns: &NullSpace, rho: &[f64], n: usize) -> Option<Vec<f64>> {
    let prs = pairs(ns.n_cp);
    let products: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    if products.len() > prs.len() {
        return None;
    }
    let mut l = DMatrix::<f64>::zeros(prs.len(), products.len());
    for (r, &pair) in prs.iter().enumerate() {
        for (c, &(i, j)) in products.iter().enumerate() {
            let d = ns.control_delta(i, pair).dot(&ns.control_delta(j, pair));
            l[(r, c)] = if i == j { d } else { 2.0 * d };
        }
    }
    let b = DMatrix::from_column_slice(rho.len(), 1, rho);
    let sol = SVD::new(l, true, true).solve(&b, 1e-14).ok()?;
    let b00 = sol[0];
    let mut betas = vec![0.0; ns.vectors.len()];
    betas[0] = b00.abs().sqrt();
    if betas[0] == 0.0 {
        return None;
    }
    for (c, &(i, j)) in products.iter().enumerate() {
        if i == 0 && j > 0 {
            betas[j] = sol[c] / betas[0];
        }
    }
    Some(betas)
}

/// Gauss-Newton on the exact distance residuals over all null vectors.
fn refine_betas(ns: &NullSpace, rho: &[f64], betas: &mut [f64]) {
    let prs = pairs(ns.n_cp);
    let m = betas.len();
    for _ in 0..10 {
        let mut jac = DMatrix::<f64>::zeros(prs.len(), m);
        let mut res = DVector::<f64>::zeros(prs.len());
        for (r, &pair) in prs.iter().enumerate() {
            let deltas: Vec<Vec3> = (0..m).map(|i| ns.control_delta(i, pair)).collect();
            let d = deltas.iter().zip(betas.iter()).fold(Vec3::zeros(), |acc, (v, b)| acc + v * *b);
            res[r] = rho[r] - d.norm_squared();
            for i in 0..m {
                jac[(r, i)] = 2.0 * d.dot(&deltas[i]);
            }
        }
        let Ok(step) = SVD::new(jac, true, true).solve(&res, 1e-14) else {
            return;
        };
        for i in 0..m {
            betas[i] += step[i];
        }
        if step.norm() < 1e-15 {
            break;
        }
    }
}

/// EPnP pose of the marker frame in the camera frame.
///
/// `reference` holds the marker coordinates in the marker frame and
/// `images` the corresponding pixels; `images[k].index` selects the
/// reference point.
pub fn estimate_pose_epnp(
    reference: &[Vec3],
    images: &[MarkerImage],
    camera: &CameraModel,
) -> Result<PnpSolution, VisionError> {
    if images.len() < 4 {
        return Err(VisionError::InsufficientPoints(images.len()));
    }
    let world: Vec<Vec3> = images
        .iter()
        .map(|im| reference.get(im.index).copied().ok_or(VisionError::InsufficientPoints(0)))
        .collect::<Result<_, _>>()?;
    let frame = control_frame(&world)?;
    let n_cp = frame.points.len();

    let mut m = DMatrix::<f64>::zeros(2 * world.len(), 3 * n_cp);
    for (k, (alpha, im)) in frame.alphas.iter().zip(images).enumerate() {
        let (u, v) = (im.pixel.x, im.pixel.y);
        for (j, a) in alpha.iter().enumerate() {
            m[(2 * k, 3 * j)] = a * camera.fx;
            m[(2 * k, 3 * j + 2)] = a * (camera.cx - u);
            m[(2 * k + 1, 3 * j + 1)] = a * camera.fy;
            m[(2 * k + 1, 3 * j + 2)] = a * (camera.cy - v);
        }
    }
    let mtm = m.transpose() * &m;
    let eig = SymmetricEigen::new(mtm);
    let mut order: Vec<usize> = (0..3 * n_cp).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let max_null = if n_cp == 4 { 4 } else { 3 };
    let ns = NullSpace {
        vectors: order.iter().take(max_null).map(|&k| eig.eigenvectors.column(k).into_owned()).collect(),
        n_cp,
    };
    let rho: Vec<f64> = pairs(n_cp)
        .iter()
        .map(|&(a, b)| (frame.points[a] - frame.points[b]).norm_squared())
        .collect();

    let mut best: Option<PnpSolution> = None;
    for n in 1..=3 {
        let Some(mut betas) = initial_betas(&ns, &rho, n) else {
            continue;
        };
        refine_betas(&ns, &rho, &mut betas);
        let mut cps = ns.combine(&betas);
        let mut cam_pts: Vec<Vec3> = frame
            .alphas
            .iter()
            .map(|a| a.iter().zip(&cps).fold(Vec3::zeros(), |acc, (w, c)| acc + c * *w))
            .collect();
        let ahead = cam_pts.iter().filter(|p| p.z > 0.0).count();
        if 2 * ahead < cam_pts.len() {
            cps.iter_mut().for_each(|c| *c = -*c);
            cam_pts.iter_mut().for_each(|c| *c = -*c);
        }
        let pose = procrustes(&world, &cam_pts);
        let rms = reprojection_rms(&pose, &world, images, camera);
        if !rms.is_finite() {
            continue;
        }
        if best.is_none_or(|b| rms < b.reprojection_rms) {
            best = Some(PnpSolution { pose, reprojection_rms: rms, null_dimension: n });
        }
    }
    best.ok_or(VisionError::DegenerateConfiguration)
}
