//! Sparse LDLᵀ factorization of quasi-definite matrices.
//!
//! The symbolic phase computes a minimum-degree ordering and the elimination
//! tree once per sparsity pattern; the numeric phase is an up-looking
//! factorization that can be repeated cheaply when only the values change.
//! Pivots whose sign disagrees with the expected inertia are replaced by a
//! small regularization of the right sign.

use std::collections::BTreeSet;

/// Minimum-degree ordering of the graph given by the off-diagonal entries.
/// Ties are broken by the lowest node index so the result is deterministic.
pub fn minimum_degree(n: usize, entries: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in entries {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nb = std::mem::take(&mut adj[v]);
        for &u in &nb {
            queue.remove(&(adj[u].len(), u));
            merged.clear();
            let (a, b) = (&adj[u], &nb);
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = if q >= b.len() || (p < a.len() && a[p] <= b[q]) {
                    let x = a[p];
                    if q < b.len() && b[q] == x {
                        q += 1;
                    }
                    p += 1;
                    x
                } else {
                    q += 1;
                    b[q - 1]
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.insert((adj[u].len(), u));
        }
    }
    order
}

/// Ordering, elimination tree and storage layout for one sparsity pattern.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
    /// Upper-triangular CSC pattern of the permuted matrix.
    ap: Vec<usize>,
    ai: Vec<usize>,
    /// Slot in `ai`/values for each input entry.
    slot: Vec<usize>,
    etree: Vec<Option<usize>>,
    lp: Vec<usize>,
}

impl Symbolic {
    /// `entries` lists the upper-triangular pattern `(row, col)` with
    /// `row <= col` in original numbering. All diagonal entries must appear.
    pub fn analyze(n: usize, entries: &[(usize, usize)]) -> Symbolic {
        let perm = minimum_degree(n, entries);
        let mut iperm = vec![0; n];
        for (k, &v) in perm.iter().enumerate() {
            iperm[v] = k;
        }
        let mut cols: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, &(r, c)) in entries.iter().enumerate() {
            let (pr, pc) = (iperm[r], iperm[c]);
            let (i, j) = if pr <= pc { (pr, pc) } else { (pc, pr) };
            cols[j].push((i, e));
        }
        let mut ap = Vec::with_capacity(n + 1);
        let mut ai = Vec::with_capacity(entries.len());
        let mut slot = vec![0; entries.len()];
        ap.push(0);
        for col in cols.iter_mut() {
            col.sort_unstable();
            let mut last = usize::MAX;
            for &(i, e) in col.iter() {
                if i != last {
                    ai.push(i);
                    last = i;
                }
                slot[e] = ai.len() - 1;
            }
            ap.push(ai.len());
        }

        // Elimination tree and column counts of L.
        let mut etree = vec![None; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![usize::MAX; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i].is_none() {
                        etree[i] = Some(j);
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    match etree[i] {
                        Some(next) => i = next,
                        None => break,
                    }
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        Symbolic {
            n,
            perm,
            ap,
            ai,
            slot,
            etree,
            lp,
        }
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }
}

/// Numeric LDLᵀ factor.
#[derive(Debug, Clone)]
pub struct Factor {
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    ax: Vec<f64>,
    /// Number of pivots replaced by the dynamic regularization.
    pub bumped: usize,
}

impl Factor {
    pub fn new(sym: &Symbolic) -> Factor {
        let nnz = sym.factor_nnz();
        Factor {
            li: vec![0; nnz],
            lx: vec![0.0; nnz],
            d: vec![0.0; sym.n],
            dinv: vec![0.0; sym.n],
            ax: vec![0.0; sym.ai.len()],
            bumped: 0,
        }
    }

    /// Factor the matrix whose input entries carry `values`. `signs[i]` is the
    /// expected pivot sign of original index `i`; pivots that are too small or
    /// of the wrong sign are replaced by `signs[i] * delta`.
    pub fn factor(&mut self, sym: &Symbolic, values: &[f64], signs: &[f64], eps: f64, delta: f64) {
        let n = sym.n;
        self.ax.iter_mut().for_each(|v| *v = 0.0);
        for (e, &v) in values.iter().enumerate() {
            self.ax[sym.slot[e]] += v;
        }
        self.bumped = 0;
        let mut y_vals = vec![0.0; n];
        let mut y_mark = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = sym.lp[..n].to_vec();

        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in sym.ap[k]..sym.ap[k + 1] {
                let b = sym.ai[p];
                if b == k {
                    self.d[k] = self.ax[p];
                    continue;
                }
                y_vals[b] = self.ax[p];
                if !y_mark[b] {
                    y_mark[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = sym.etree[b];
                    while let Some(nx) = next {
                        if nx >= k || y_mark[nx] {
                            break;
                        }
                        y_mark[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        next = sym.etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for q in (0..nnz_y).rev() {
                let c = y_idx[q];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for j in sym.lp[c]..tmp {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let l = yc * self.dinv[c];
                self.lx[tmp] = l;
                self.d[k] -= yc * l;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_mark[c] = false;
            }
            let s = signs[sym.perm[k]];
            if s * self.d[k] <= eps {
                self.d[k] = s * delta;
                self.bumped += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
    }

    /// Solve in place; `rhs` is in original numbering.
    pub fn solve(&self, sym: &Symbolic, rhs: &mut [f64], work: &mut Vec<f64>) {
        let n = sym.n;
        work.clear();
        work.extend(sym.perm.iter().map(|&i| rhs[i]));
        for i in 0..n {
            let xi = work[i];
            if xi != 0.0 {
                for j in sym.lp[i]..sym.lp[i + 1] {
                    work[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            work[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut xi = work[i];
            for j in sym.lp[i]..sym.lp[i + 1] {
                xi -= self.lx[j] * work[self.li[j]];
            }
            work[i] = xi;
        }
        for (k, &i) in sym.perm.iter().enumerate() {
            rhs[i] = work[k];
        }
    }
}
