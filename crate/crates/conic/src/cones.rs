//! Product cone `R₊ˡ × Q^{q₁} × … × Q^{q_k}` and Nesterov–Todd scaling.

/// Dimensions of the product cone. Orthant rows come first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeDims {
    pub orthant: usize,
    pub soc: Vec<usize>,
}

impl ConeDims {
    pub fn total(&self) -> usize {
        self.orthant + self.soc.iter().sum::<usize>()
    }

    /// Barrier degree: one per orthant row, one per second-order cone.
    pub fn degree(&self) -> usize {
        self.orthant + self.soc.len()
    }

    /// Start offsets of each second-order cone block.
    pub fn soc_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.soc.len());
        let mut k = self.orthant;
        for &q in &self.soc {
            off.push(k);
            k += q;
        }
        off
    }
}

fn soc_residual(x: &[f64]) -> f64 {
    let t = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    (x[0] - t) * (x[0] + t)
}

/// Smallest `a` such that `x + a·e` lies in the cone (negative when `x` is interior).
pub fn distance_to_boundary(dims: &ConeDims, x: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for v in &x[..dims.orthant] {
        worst = worst.max(-v);
    }
    let mut k = dims.orthant;
    for &q in &dims.soc {
        let blk = &x[k..k + q];
        let t = blk[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(t - blk[0]);
        k += q;
    }
    worst
}

/// Add `a` times the identity element.
pub fn add_identity(dims: &ConeDims, x: &mut [f64], a: f64) {
    for v in &mut x[..dims.orthant] {
        *v += a;
    }
    for off in dims.soc_offsets() {
        x[off] += a;
    }
}

/// Largest `α ≥ 0` (capped at `cap`) keeping `x + α·d` in the cone.
pub fn max_step(dims: &ConeDims, x: &[f64], d: &[f64], cap: f64) -> f64 {
    let mut alpha = cap;
    for i in 0..dims.orthant {
        if d[i] < 0.0 {
            alpha = alpha.min(-x[i] / d[i]);
        }
    }
    let mut k = dims.orthant;
    for &q in &dims.soc {
        alpha = alpha.min(soc_max_step(&x[k..k + q], &d[k..k + q], cap));
        k += q;
    }
    alpha.max(0.0)
}

fn soc_max_step(x: &[f64], d: &[f64], cap: f64) -> f64 {
    // q(α) = (x0+αd0)² − ‖x1+αd1‖² stays positive on [0, α*).
    let a = d[0] * d[0] - d[1..].iter().map(|v| v * v).sum::<f64>();
    let b = 2.0 * (x[0] * d[0] - x[1..].iter().zip(&d[1..]).map(|(p, q)| p * q).sum::<f64>());
    let c = soc_residual(x).max(0.0);
    let mut alpha = cap;
    if x[0] + cap * d[0] < 0.0 && d[0] < 0.0 {
        alpha = alpha.min(-x[0] / d[0]);
    }
    let root = if a.abs() < 1e-300 {
        if b < 0.0 {
            Some(-c / b)
        } else {
            None
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            // Numerically stable pair of roots.
            let qq = -0.5 * (b + b.signum() * sq);
            let r1 = qq / a;
            let r2 = if qq != 0.0 { c / qq } else { f64::INFINITY };
            [r1, r2]
                .into_iter()
                .filter(|r| *r >= 0.0)
                .fold(None, |acc: Option<f64>, r| {
                    Some(acc.map_or(r, |m| m.min(r)))
                })
        }
    };
    if let Some(r) = root {
        alpha = alpha.min(r);
    }
    alpha
}

/// Jordan product `u ∘ v`.
pub fn jordan_product(dims: &ConeDims, u: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..dims.orthant {
        out[i] = u[i] * v[i];
    }
    let mut k = dims.orthant;
    for &q in &dims.soc {
        let (uu, vv) = (&u[k..k + q], &v[k..k + q]);
        out[k] = uu.iter().zip(vv).map(|(a, b)| a * b).sum();
        for j in 1..q {
            out[k + j] = uu[0] * vv[j] + vv[0] * uu[j];
        }
        k += q;
    }
}

/// Solve `λ ∘ x = d` for `x`.
pub fn jordan_divide(dims: &ConeDims, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    for i in 0..dims.orthant {
        out[i] = d[i] / lambda[i];
    }
    let mut k = dims.orthant;
    for &q in &dims.soc {
        let (l, dd) = (&lambda[k..k + q], &d[k..k + q]);
        let det = soc_residual(l);
        let l1d1: f64 = l[1..].iter().zip(&dd[1..]).map(|(a, b)| a * b).sum();
        let x0 = (l[0] * dd[0] - l1d1) / det;
        out[k] = x0;
        for j in 1..q {
            out[k + j] = (dd[j] - x0 * l[j]) / l[0];
        }
        k += q;
    }
}

/// Inner product `u'v` over the whole cone.
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone)]
struct SocScaling {
    eta: f64,
    /// `W = η (2 v vᵀ − J)`.
    v: Vec<f64>,
}

/// Nesterov–Todd scaling `W` with `W z = W⁻¹ s = λ`.
#[derive(Debug, Clone)]
pub struct NtScaling {
    dims: ConeDims,
    orthant_w: Vec<f64>,
    soc: Vec<SocScaling>,
    pub lambda: Vec<f64>,
}

impl NtScaling {
    /// Returns `None` if `s` or `z` is not strictly interior.
    pub fn compute(dims: &ConeDims, s: &[f64], z: &[f64]) -> Option<NtScaling> {
        let m = dims.total();
        let mut lambda = vec![0.0; m];
        let mut orthant_w = Vec::with_capacity(dims.orthant);
        for i in 0..dims.orthant {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return None;
            }
            orthant_w.push((s[i] / z[i]).sqrt());
            lambda[i] = (s[i] * z[i]).sqrt();
        }
        let mut soc = Vec::with_capacity(dims.soc.len());
        let mut k = dims.orthant;
        for &q in &dims.soc {
            let (sb, zb) = (&s[k..k + q], &z[k..k + q]);
            let sr = soc_residual(sb);
            let zr = soc_residual(zb);
            if !(sr > 0.0 && zr > 0.0 && sb[0] > 0.0 && zb[0] > 0.0) {
                return None;
            }
            let (sn, zn) = (sr.sqrt(), zr.sqrt());
            let eta = (sn / zn).sqrt();
            let sbar: Vec<f64> = sb.iter().map(|v| v / sn).collect();
            let zbar: Vec<f64> = zb.iter().map(|v| v / zn).collect();
            let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
            let mut w: Vec<f64> = (0..q)
                .map(|j| {
                    let jz = if j == 0 { zbar[0] } else { -zbar[j] };
                    (sbar[j] + jz) / (2.0 * gamma)
                })
                .collect();
            let scale = (2.0 * (w[0] + 1.0)).sqrt();
            w[0] += 1.0;
            w.iter_mut().for_each(|x| *x /= scale);
            let sc = SocScaling { eta, v: w };
            let vz = dot(&sc.v, zb);
            for j in 0..q {
                let jz = if j == 0 { zb[0] } else { -zb[j] };
                lambda[k + j] = eta * (2.0 * sc.v[j] * vz - jz);
            }
            soc.push(sc);
            k += q;
        }
        Some(NtScaling {
            dims: dims.clone(),
            orthant_w,
            soc,
            lambda,
        })
    }

    /// `out = W x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dims.orthant {
            out[i] = self.orthant_w[i] * x[i];
        }
        let mut k = self.dims.orthant;
        for (sc, &q) in self.soc.iter().zip(&self.dims.soc) {
            let xb = &x[k..k + q];
            let vx = dot(&sc.v, xb);
            for j in 0..q {
                let jx = if j == 0 { xb[0] } else { -xb[j] };
                out[k + j] = sc.eta * (2.0 * sc.v[j] * vx - jx);
            }
            k += q;
        }
    }

    /// `out = W⁻¹ x`
    pub fn apply_inverse(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dims.orthant {
            out[i] = x[i] / self.orthant_w[i];
        }
        let mut k = self.dims.orthant;
        for (sc, &q) in self.soc.iter().zip(&self.dims.soc) {
            let xb = &x[k..k + q];
            // W⁻¹ = η⁻¹ (2 Jv vᵀJ − J)
            let vjx = sc.v[0] * xb[0] - dot(&sc.v[1..], &xb[1..]);
            for j in 0..q {
                let (jv, jx) = if j == 0 {
                    (sc.v[0], xb[0])
                } else {
                    (-sc.v[j], -xb[j])
                };
                out[k + j] = (2.0 * jv * vjx - jx) / sc.eta;
            }
            k += q;
        }
    }

    /// Diagonal of `W²` on the orthant part.
    pub fn orthant_w2(&self) -> impl Iterator<Item = f64> + '_ {
        self.orthant_w.iter().map(|w| w * w)
    }

    /// Dense `W²` for second-order cone `idx`, row-major.
    pub fn soc_w2(&self, idx: usize) -> Vec<f64> {
        let sc = &self.soc[idx];
        let q = sc.v.len();
        // W̄ e = 2 v v₀ − e, and W̄² = 2 w̄ w̄ᵀ − J.
        let mut wbar = sc.v.iter().map(|x| 2.0 * x * sc.v[0]).collect::<Vec<_>>();
        wbar[0] -= 1.0;
        let e2 = sc.eta * sc.eta;
        let mut out = vec![0.0; q * q];
        for i in 0..q {
            for j in 0..q {
                let jij = if i == j {
                    if i == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    0.0
                };
                out[i * q + j] = e2 * (2.0 * wbar[i] * wbar[j] - jij);
            }
        }
        out
    }
}
