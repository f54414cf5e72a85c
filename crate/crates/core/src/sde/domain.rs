use crate::error::{ensure, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceLabel {
    Positive,
    Negative,
    Lateral,
    Timeout,
}

/// Exit geometry. Every variant is an intersection of half-spaces
/// `{n·x < c}`, each tagged with the label of its face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// `center + ℛ((−L⁻, L⁺) × (−L̃, L̃)^{d−1})`; the columns of the
    /// row-major `rotation` are `ℛe_i` and `∂₊` is the face `ℛe₁·x = L⁺`.
    Box { rotation: Vec<f64>, center: Vec<f64>, depth_neg: f64, depth_pos: f64, halfwidth: f64 },
    /// `{|x·e₁| < L}`.
    Slab { half_width: f64 },
    /// `{|(x − c)·e₁| < L, |(x − c)·e_j| < h}`, the tube around a start point.
    Tube { center: Vec<f64>, length: f64, halfwidth: f64 },
    /// `{−L < x·e₁ < L}` for one-dimensional runs.
    Interval { half_width: f64 },
    /// `{lo < x·ℓ < hi}`; `∂₊` is `x·ℓ = hi`.
    Thresholds { direction: Vec<f64>, lo: f64, hi: f64 },
}

#[derive(Clone, Debug)]
pub(crate) struct Face {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub label: FaceLabel,
}

/// Domain lowered to its face list for one dimension.
#[derive(Clone, Debug)]
pub struct CompiledDomain {
    pub(crate) dim: usize,
    pub(crate) faces: Vec<Face>,
    pub(crate) diameter: f64,
}

fn unit(d: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = s;
    v
}

pub fn identity_rotation(d: usize) -> Vec<f64> {
    let mut r = vec![0.0; d * d];
    for i in 0..d {
        r[i * d + i] = 1.0;
    }
    r
}

/// Orthogonal map sending `e₁` to the unit vector `ℓ` (a Householder
/// reflection, or the identity when `ℓ = e₁`).
pub fn rotation_to(direction: &[f64]) -> Vec<f64> {
    let d = direction.len();
    let n = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    let l: Vec<f64> = direction.iter().map(|c| c / n).collect();
    let mut v = l.clone();
    v[0] -= 1.0;
    let vv: f64 = v.iter().map(|c| c * c).sum();
    let mut r = identity_rotation(d);
    if vv < 1e-30 {
        return r;
    }
    for i in 0..d {
        for j in 0..d {
            r[i * d + j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    r
}

impl Domain {
    /// `B(ℛ, L⁻, L⁺, L̃)` centred at the origin.
    pub fn box_domain(rotation: Vec<f64>, depth_neg: f64, depth_pos: f64, halfwidth: f64) -> Self {
        let d = (rotation.len() as f64).sqrt() as usize;
        Domain::Box { rotation, center: vec![0.0; d], depth_neg, depth_pos, halfwidth }
    }

    /// Box of the effective criterion, `x·ℓ ∈ (−L + R + 2, L + 2)`, transverse
    /// half-width `L̃`.
    pub fn criterion_box(dim: usize, l: f64, l_tilde: f64, range: f64) -> Self {
        Domain::box_domain(identity_rotation(dim), l - range - 2.0, l + 2.0, l_tilde)
    }

    /// Box of the renormalisation scheme, `x·ℓ ∈ (−(L − R − 1), L + 1)`.
    pub fn hierarchy_box(dim: usize, l: f64, l_tilde: f64, range: f64) -> Self {
        Domain::box_domain(identity_rotation(dim), l - range - 1.0, l + 1.0, l_tilde)
    }

    /// The tube `C_L = {−1/4 < x·e₁ < L, |x·e_j| < L/4}`.
    pub fn traversal_tube(dim: usize, l: f64) -> Self {
        Domain::box_domain(identity_rotation(dim), 0.25, l, 0.25 * l)
    }

    /// The same set with `ℛ` composed with the reflection of `e₁`, so that
    /// `∂₊` becomes the face on the negative side.
    pub fn mirrored(&self) -> Self {
        match self {
            Domain::Box { rotation, center, depth_neg, depth_pos, halfwidth } => {
                let d = center.len();
                let mut r = rotation.clone();
                for i in 0..d {
                    r[i * d] = -r[i * d];
                }
                let mut c = center.clone();
                c[0] = -c[0];
                Domain::Box { rotation: r, center: c, depth_neg: *depth_neg, depth_pos: *depth_pos, halfwidth: *halfwidth }
            }
            Domain::Thresholds { direction, lo, hi } => {
                let mut l = direction.clone();
                l[0] = -l[0];
                Domain::Thresholds { direction: l, lo: *lo, hi: *hi }
            }
            other => other.clone(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Domain::Box { rotation, center, depth_neg, depth_pos, halfwidth } => {
                ensure(rotation.len() == dim * dim && center.len() == dim, "domain", || format!("box built for another dimension than {dim}"))?;
                ensure(*depth_neg >= 0.0 && *depth_pos >= 0.0 && *halfwidth > 0.0, "domain", || "box depths must be ≥ 0 and halfwidth > 0".into())?;
                ensure(depth_neg + depth_pos > 0.0, "domain", || "box has zero length".into())
            }
            Domain::Slab { half_width } | Domain::Interval { half_width } => {
                ensure(*half_width > 0.0, "domain", || "half width must be positive".into())
            }
            Domain::Tube { center, length, halfwidth } => {
                ensure(center.len() == dim, "domain", || "tube centre has wrong dimension".into())?;
                ensure(*length > 0.0 && *halfwidth > 0.0, "domain", || "tube sizes must be positive".into())
            }
            Domain::Thresholds { direction, lo, hi } => {
                ensure(direction.len() == dim, "domain", || "direction has wrong dimension".into())?;
                ensure(lo < hi, "domain", || format!("thresholds need lo < hi, got {lo} ≥ {hi}"))
            }
        }
    }

    pub fn compile(&self, dim: usize) -> Result<CompiledDomain> {
        self.validate(dim)?;
        let d = dim;
        let mut faces = Vec::new();
        let push = |faces: &mut Vec<Face>, normal: Vec<f64>, offset: f64, label| faces.push(Face { normal, offset, label });
        let diameter = match self {
            Domain::Box { rotation, center, depth_neg, depth_pos, halfwidth } => {
                for i in 0..d {
                    let n: Vec<f64> = (0..d).map(|r| rotation[r * d + i]).collect();
                    let nc: f64 = n.iter().zip(center).map(|(a, b)| a * b).sum();
                    let neg: Vec<f64> = n.iter().map(|c| -c).collect();
                    if i == 0 {
                        push(&mut faces, n, depth_pos + nc, FaceLabel::Positive);
                        push(&mut faces, neg, depth_neg - nc, FaceLabel::Negative);
                    } else {
                        push(&mut faces, n, halfwidth + nc, FaceLabel::Lateral);
                        push(&mut faces, neg, halfwidth - nc, FaceLabel::Lateral);
                    }
                }
                (depth_neg + depth_pos).max(if d > 1 { 2.0 * halfwidth } else { 0.0 })
            }
            Domain::Slab { half_width } | Domain::Interval { half_width } => {
                push(&mut faces, unit(d, 0, 1.0), *half_width, FaceLabel::Positive);
                push(&mut faces, unit(d, 0, -1.0), *half_width, FaceLabel::Negative);
                2.0 * half_width
            }
            Domain::Tube { center, length, halfwidth } => {
                push(&mut faces, unit(d, 0, 1.0), center[0] + length, FaceLabel::Positive);
                push(&mut faces, unit(d, 0, -1.0), length - center[0], FaceLabel::Negative);
                for j in 1..d {
                    push(&mut faces, unit(d, j, 1.0), center[j] + halfwidth, FaceLabel::Lateral);
                    push(&mut faces, unit(d, j, -1.0), halfwidth - center[j], FaceLabel::Lateral);
                }
                2.0 * length.max(if d > 1 { *halfwidth } else { 0.0 })
            }
            Domain::Thresholds { direction, lo, hi } => {
                let n = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
                let l: Vec<f64> = direction.iter().map(|c| c / n).collect();
                let neg: Vec<f64> = l.iter().map(|c| -c).collect();
                push(&mut faces, l, *hi, FaceLabel::Positive);
                push(&mut faces, neg, -lo, FaceLabel::Negative);
                hi - lo
            }
        };
        Ok(CompiledDomain { dim, faces, diameter })
    }
}

impl CompiledDomain {
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Signed distance to each face (positive inside).
    pub fn gaps<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = (f64, FaceLabel)> + 'a {
        self.faces.iter().map(move |f| (f.offset - dot(&f.normal, x), f.label))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gaps(x).all(|(g, _)| g > 0.0)
    }

    /// Distance to the boundary (for points inside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.gaps(x).map(|(g, _)| g).fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
