//! Homogeneous self-dual embedding interior-point method with
//! Nesterov–Todd scaling and Mehrotra predictor-corrector steps.

use crate::cones::{self, dot, ConeDims, NtScaling};
use crate::ldl::{Factor, Symbolic};
use crate::reduce::StandardForm;
use crate::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StdStatus {
    Optimal,
    ReducedAccuracy,
    PrimalInfeasible,
    DualInfeasible,
    Failure,
}

#[derive(Debug, Clone)]
pub(crate) struct StdResult {
    pub status: StdStatus,
    pub x: Vec<f64>,
    pub dual_cost: f64,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Quasi-definite KKT system `[0 Aᵀ Gᵀ; A 0 0; G 0 −W²]` with static
/// regularization and iterative refinement.
struct Kkt<'a> {
    sf: &'a StandardForm,
    n: usize,
    p: usize,
    m: usize,
    sym: Symbolic,
    factor: Factor,
    values: Vec<f64>,
    signs: Vec<f64>,
    cone_start: usize,
    reg: f64,
    scaling: Option<NtScaling>,
    work: Vec<f64>,
    refine: usize,
}

impl<'a> Kkt<'a> {
    fn new(sf: &'a StandardForm, settings: &Settings) -> Kkt<'a> {
        let n = sf.num_free();
        let p = sf.a.rows;
        let m = sf.g.rows;
        let reg = settings.static_reg;
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            entries.push((j, j));
            values.push(reg);
        }
        for j in 0..n {
            for k in sf.a.colptr[j]..sf.a.colptr[j + 1] {
                entries.push((j, n + sf.a.rowind[k]));
                values.push(sf.a.vals[k]);
            }
            for k in sf.g.colptr[j]..sf.g.colptr[j + 1] {
                entries.push((j, n + p + sf.g.rowind[k]));
                values.push(sf.g.vals[k]);
            }
        }
        for r in 0..p {
            entries.push((n + r, n + r));
            values.push(-reg);
        }
        let cone_start = entries.len();
        let base = n + p;
        for i in 0..sf.dims.orthant {
            entries.push((base + i, base + i));
            values.push(-1.0 - reg);
        }
        for (off, &q) in sf.dims.soc_offsets().iter().zip(&sf.dims.soc) {
            for a in 0..q {
                for b in a..q {
                    entries.push((base + off + a, base + off + b));
                    values.push(if a == b { -1.0 - reg } else { 0.0 });
                }
            }
        }
        let dim = n + p + m;
        let sym = Symbolic::analyze(dim, &entries);
        let factor = Factor::new(&sym);
        let signs = (0..dim).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
        Kkt {
            sf,
            n,
            p,
            m,
            sym,
            factor,
            values,
            signs,
            cone_start,
            reg,
            scaling: None,
            work: Vec::new(),
            refine: settings.refine_steps,
        }
    }

    fn update(&mut self, scaling: NtScaling, settings: &Settings) {
        let mut k = self.cone_start;
        for w2 in scaling.orthant_w2() {
            self.values[k] = -w2 - self.reg;
            k += 1;
        }
        for (c, &q) in self.sf.dims.soc.iter().enumerate() {
            let w2 = scaling.soc_w2(c);
            for a in 0..q {
                for b in a..q {
                    self.values[k] = -w2[a * q + b] - if a == b { self.reg } else { 0.0 };
                    k += 1;
                }
            }
        }
        self.scaling = Some(scaling);
        self.factor.factor(
            &self.sym,
            &self.values,
            &self.signs,
            settings.dynamic_eps,
            settings.dynamic_delta,
        );
    }

    /// `out = K v` with the unregularized matrix.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let (n, p, m) = (self.n, self.p, self.m);
        out.iter_mut().for_each(|o| *o = 0.0);
        let (vx, rest) = v.split_at(n);
        let (vy, vz) = rest.split_at(p);
        {
            let (ox, rest) = out.split_at_mut(n);
            let (oy, oz) = rest.split_at_mut(p);
            self.sf.a.tmul_add(vy, ox);
            self.sf.g.tmul_add(vz, ox);
            self.sf.a.mul_add(vx, oy);
            self.sf.g.mul_add(vx, oz);
            let sc = self.scaling.as_ref().expect("scaling set before solve");
            let mut t = vec![0.0; m];
            let mut w2 = vec![0.0; m];
            sc.apply(vz, &mut t);
            sc.apply(&t, &mut w2);
            for i in 0..m {
                oz[i] -= w2[i];
            }
        }
    }

    fn solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let mut sol = rhs.to_vec();
        self.factor.solve(&self.sym, &mut sol, &mut self.work);
        let bnorm = inf_norm(rhs);
        let mut kv = vec![0.0; rhs.len()];
        for _ in 0..self.refine {
            self.apply(&sol, &mut kv);
            let mut r: Vec<f64> = rhs.iter().zip(&kv).map(|(a, b)| a - b).collect();
            if inf_norm(&r) <= 1e-14 * (1.0 + bnorm) {
                break;
            }
            self.factor.solve(&self.sym, &mut r, &mut self.work);
            for (s, d) in sol.iter_mut().zip(&r) {
                *s += d;
            }
        }
        sol
    }
}

#[derive(Debug, Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

#[derive(Debug, Clone, Copy)]
struct Metrics {
    pres: f64,
    dres: f64,
    gap_rel: f64,
    dcost: f64,
    primal_cert: Option<f64>,
    dual_cert: Option<f64>,
}

impl Metrics {
    fn worst(&self) -> f64 {
        self.pres.max(self.dres).max(self.gap_rel)
    }
}

struct Residuals {
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    rtau: f64,
}

fn residuals(sf: &StandardForm, it: &Iterate) -> (Residuals, Metrics) {
    let (n, p, m) = (sf.num_free(), sf.a.rows, sf.g.rows);
    let mut aty = vec![0.0; n];
    sf.a.tmul_add(&it.y, &mut aty);
    sf.g.tmul_add(&it.z, &mut aty);
    let mut ax = vec![0.0; p];
    sf.a.mul_add(&it.x, &mut ax);
    let mut gx = vec![0.0; m];
    sf.g.mul_add(&it.x, &mut gx);

    let rx: Vec<f64> = (0..n).map(|j| aty[j] + sf.c[j] * it.tau).collect();
    let ry: Vec<f64> = (0..p).map(|r| ax[r] - sf.b[r] * it.tau).collect();
    let rz: Vec<f64> = (0..m).map(|r| gx[r] + it.s[r] - sf.h[r] * it.tau).collect();
    let cx = dot(&sf.c, &it.x);
    let by_hz = dot(&sf.b, &it.y) + dot(&sf.h, &it.z);
    let rtau = it.kappa + cx + by_hz;

    let bnorm = inf_norm(&sf.b).max(inf_norm(&sf.h));
    let cnorm = inf_norm(&sf.c);
    let pres = inf_norm(&ry).max(inf_norm(&rz)) / it.tau / (1.0 + bnorm);
    let dres = inf_norm(&rx) / it.tau / (1.0 + cnorm);
    let pcost = cx / it.tau;
    let dcost = -by_hz / it.tau;
    let gap = dot(&it.s, &it.z) / (it.tau * it.tau);
    let gap_rel = gap / (1.0 + pcost.abs().min(dcost.abs()));

    let primal_cert = (by_hz < 0.0).then(|| inf_norm(&aty) / -by_hz);
    let dual_cert = (cx < 0.0).then(|| {
        let gxs: Vec<f64> = (0..m).map(|r| gx[r] + it.s[r]).collect();
        inf_norm(&ax).max(inf_norm(&gxs)) / -cx
    });
    (
        Residuals { rx, ry, rz, rtau },
        Metrics {
            pres,
            dres,
            gap_rel,
            dcost,
            primal_cert,
            dual_cert,
        },
    )
}

fn classify(m: &Metrics, tol: f64) -> Option<StdStatus> {
    if m.pres < tol && m.dres < tol && m.gap_rel < tol {
        return Some(StdStatus::Optimal);
    }
    if m.primal_cert.is_some_and(|c| c < tol) {
        return Some(StdStatus::PrimalInfeasible);
    }
    if m.dual_cert.is_some_and(|c| c < tol) {
        return Some(StdStatus::DualInfeasible);
    }
    None
}

fn finish(it: &Iterate, m: &Metrics, status: StdStatus, iterations: usize) -> StdResult {
    StdResult {
        status,
        x: it.x.iter().map(|v| v / it.tau).collect(),
        dual_cost: m.dcost,
        iterations,
    }
}

struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

pub(crate) fn solve_standard(sf: &StandardForm, settings: &Settings) -> StdResult {
    let (n, p, m) = (sf.num_free(), sf.a.rows, sf.g.rows);
    let dims: &ConeDims = &sf.dims;
    let mut kkt = Kkt::new(sf, settings);

    // Initial point from two least-squares solves with W = I.
    let mut e = vec![0.0; m];
    cones::add_identity(dims, &mut e, 1.0);
    let ident = NtScaling::compute(dims, &e, &e).expect("identity is interior");
    kkt.update(ident, settings);
    let mut rhs = vec![0.0; n + p + m];
    rhs[n..n + p].copy_from_slice(&sf.b);
    rhs[n + p..].copy_from_slice(&sf.h);
    let sol = kkt.solve(&rhs);
    let x = sol[..n].to_vec();
    let mut s: Vec<f64> = sol[n + p..].iter().map(|v| -v).collect();
    let shift = cones::distance_to_boundary(dims, &s);
    if shift >= 0.0 {
        cones::add_identity(dims, &mut s, 1.0 + shift);
    }
    rhs.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        rhs[j] = -sf.c[j];
    }
    let sol = kkt.solve(&rhs);
    let y = sol[n..n + p].to_vec();
    let mut z = sol[n + p..].to_vec();
    let shift = cones::distance_to_boundary(dims, &z);
    if shift >= 0.0 {
        cones::add_identity(dims, &mut z, 1.0 + shift);
    }
    let mut it = Iterate {
        x,
        y,
        z,
        s,
        tau: 1.0,
        kappa: 1.0,
    };
    let degree = dims.degree() as f64 + 1.0;

    let mut best: Option<(Iterate, Metrics)> = None;
    let mut iterations = 0;
    loop {
        let (res, met) = residuals(sf, &it);
        if settings.verbose {
            eprintln!(
                "{iterations:3} pres {:.2e} dres {:.2e} gap {:.2e} dcost {:+.6e} tau {:.2e} kappa {:.2e} pcert {:?} dcert {:?}",
                met.pres, met.dres, met.gap_rel, met.dcost, it.tau, it.kappa, met.primal_cert, met.dual_cert
            );
        }
        if let Some(status) = classify(&met, settings.tol) {
            return finish(&it, &met, status, iterations);
        }
        if best.as_ref().is_none_or(|(_, b)| met.worst() < b.worst()) {
            best = Some((it.clone(), met));
        }
        if iterations >= settings.max_iter {
            break;
        }
        let Some(scaling) = NtScaling::compute(dims, &it.s, &it.z) else {
            break;
        };
        let lambda = scaling.lambda.clone();
        kkt.update(scaling, settings);
        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / degree;

        let mut rhs1 = vec![0.0; n + p + m];
        for j in 0..n {
            rhs1[j] = -sf.c[j];
        }
        rhs1[n..n + p].copy_from_slice(&sf.b);
        rhs1[n + p..].copy_from_slice(&sf.h);
        let sol1 = kkt.solve(&rhs1);
        let denom_base =
            dot(&sf.c, &sol1[..n]) + dot(&sf.b, &sol1[n..n + p]) + dot(&sf.h, &sol1[n + p..]);

        let direction = |kkt: &mut Kkt, ds: &[f64], dkappa: f64, eta: f64| -> Option<Direction> {
            let sc = kkt.scaling.clone().expect("scaling set");
            let mut lds = vec![0.0; m];
            cones::jordan_divide(dims, &lambda, ds, &mut lds);
            let mut wlds = vec![0.0; m];
            sc.apply(&lds, &mut wlds);
            let mut rhs2 = vec![0.0; n + p + m];
            for j in 0..n {
                rhs2[j] = -eta * res.rx[j];
            }
            for r in 0..p {
                rhs2[n + r] = -eta * res.ry[r];
            }
            for r in 0..m {
                rhs2[n + p + r] = -eta * res.rz[r] - wlds[r];
            }
            let sol2 = kkt.solve(&rhs2);
            let num = -eta * res.rtau
                - dkappa / it.tau
                - dot(&sf.c, &sol2[..n])
                - dot(&sf.b, &sol2[n..n + p])
                - dot(&sf.h, &sol2[n + p..]);
            let den = denom_base - it.kappa / it.tau;
            if den.abs() < 1e-300 || !num.is_finite() {
                return None;
            }
            let dtau = num / den;
            let comb: Vec<f64> = sol2.iter().zip(&sol1).map(|(a, b)| a + dtau * b).collect();
            let dz = comb[n + p..].to_vec();
            let mut wdz = vec![0.0; m];
            sc.apply(&dz, &mut wdz);
            let inner: Vec<f64> = lds.iter().zip(&wdz).map(|(a, b)| a - b).collect();
            let mut dsv = vec![0.0; m];
            sc.apply(&inner, &mut dsv);
            let dk = (dkappa - it.kappa * dtau) / it.tau;
            if comb.iter().chain(&dsv).any(|v| !v.is_finite()) || !dk.is_finite() {
                return None;
            }
            Some(Direction {
                x: comb[..n].to_vec(),
                y: comb[n..n + p].to_vec(),
                z: dz,
                s: dsv,
                tau: dtau,
                kappa: dk,
            })
        };
        // Step to the boundary, measured both on (s, z) and in the scaled
        // space where both are λ. Near the boundary the scaled test avoids
        // cancellation; the larger step is used only if the point it
        // produces is verified to be interior.
        let sc_step = kkt.scaling.clone().expect("scaling set");
        let step = |d: &Direction, cap: f64| -> f64 {
            let unscaled = cones::max_step(dims, &it.s, &d.s, cap)
                .min(cones::max_step(dims, &it.z, &d.z, cap));
            let mut ws = vec![0.0; m];
            sc_step.apply_inverse(&d.s, &mut ws);
            let mut wz = vec![0.0; m];
            sc_step.apply(&d.z, &mut wz);
            let scaled = cones::max_step(dims, &lambda, &ws, cap)
                .min(cones::max_step(dims, &lambda, &wz, cap));
            let mut a = unscaled;
            if scaled > unscaled {
                let trial = settings.step_fraction * scaled;
                let moved = |x: &[f64], dx: &[f64]| -> Vec<f64> {
                    x.iter().zip(dx).map(|(a, b)| a + trial * b).collect()
                };
                if cones::distance_to_boundary(dims, &moved(&it.s, &d.s)) < 0.0
                    && cones::distance_to_boundary(dims, &moved(&it.z, &d.z)) < 0.0
                {
                    a = scaled;
                }
            }
            if d.tau < 0.0 {
                a = a.min(-it.tau / d.tau);
            }
            if d.kappa < 0.0 {
                a = a.min(-it.kappa / d.kappa);
            }
            a
        };

        // Predictor.
        let mut ds_aff = vec![0.0; m];
        cones::jordan_product(dims, &lambda, &lambda, &mut ds_aff);
        ds_aff.iter_mut().for_each(|v| *v = -*v);
        let Some(aff) = direction(&mut kkt, &ds_aff, -it.kappa * it.tau, 1.0) else {
            break;
        };
        let alpha_aff = step(&aff, 1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let sc = kkt.scaling.clone().expect("scaling set");
        let mut wids = vec![0.0; m];
        sc.apply_inverse(&aff.s, &mut wids);
        let mut wdz = vec![0.0; m];
        sc.apply(&aff.z, &mut wdz);
        let mut cross = vec![0.0; m];
        cones::jordan_product(dims, &wids, &wdz, &mut cross);
        let mut ds: Vec<f64> = ds_aff.iter().zip(&cross).map(|(a, b)| a - b).collect();
        cones::add_identity(dims, &mut ds, sigma * mu);
        let dkappa = -it.kappa * it.tau - aff.kappa * aff.tau + sigma * mu;
        let Some(mut dir) = direction(&mut kkt, &ds, dkappa, 1.0 - sigma) else {
            break;
        };
        let mut alpha =
            (settings.step_fraction * step(&dir, 1.0 / settings.step_fraction)).min(1.0);
        if alpha < 0.1 * alpha_aff {
            // The second-order correction can point out of the cone near
            // the boundary; fall back to a plain centered step.
            let mut ds1 = ds_aff.clone();
            cones::add_identity(dims, &mut ds1, sigma * mu);
            let dkappa1 = -it.kappa * it.tau + sigma * mu;
            if let Some(d1) = direction(&mut kkt, &ds1, dkappa1, 1.0 - sigma) {
                let a1 =
                    (settings.step_fraction * step(&d1, 1.0 / settings.step_fraction)).min(1.0);
                if a1 > alpha {
                    dir = d1;
                    alpha = a1;
                }
            }
        }
        if settings.verbose {
            eprintln!("    alpha_aff {alpha_aff:.2e} sigma {sigma:.2e} alpha {alpha:.2e}");
        }
        if alpha < 1e-12 {
            break;
        }
        for (v, d) in it.x.iter_mut().zip(&dir.x) {
            *v += alpha * d;
        }
        for (v, d) in it.y.iter_mut().zip(&dir.y) {
            *v += alpha * d;
        }
        for (v, d) in it.z.iter_mut().zip(&dir.z) {
            *v += alpha * d;
        }
        for (v, d) in it.s.iter_mut().zip(&dir.s) {
            *v += alpha * d;
        }
        it.tau += alpha * dir.tau;
        it.kappa += alpha * dir.kappa;
        iterations += 1;
        if !(it.tau > 0.0 && it.kappa > 0.0) {
            break;
        }
        // Renormalize to keep the embedding well scaled.
        let scale = it.tau.max(it.kappa);
        if !(1e-8..=1e8).contains(&scale) {
            for v in
                it.x.iter_mut()
                    .chain(it.y.iter_mut())
                    .chain(it.z.iter_mut())
                    .chain(it.s.iter_mut())
            {
                *v /= scale;
            }
            it.tau /= scale;
            it.kappa /= scale;
        }
    }

    if it.tau > 0.0 && it.kappa > 0.0 {
        let (_, met) = residuals(sf, &it);
        if let Some(status @ (StdStatus::PrimalInfeasible | StdStatus::DualInfeasible)) =
            classify(&met, settings.reduced_tol)
        {
            return finish(&it, &met, status, iterations);
        }
    }
    match best {
        Some((b, met)) => {
            let status = match classify(&met, settings.reduced_tol) {
                Some(StdStatus::Optimal) => StdStatus::ReducedAccuracy,
                Some(other) => other,
                None => StdStatus::Failure,
            };
            finish(&b, &met, status, iterations)
        }
        None => StdResult {
            status: StdStatus::Failure,
            x: vec![0.0; n],
            dual_cost: f64::NAN,
            iterations,
        },
    }
}
