//! Flat sparse kernels behind the master-equation right-hand side.
//!
//! Matrices are column-major slices (`m[i + n·j]`), matching nalgebra.

use crate::device::TimeDependentOperator;
use crate::operator::{MapEntry, QOperator, Term, C64, HilbertSpace, I, ZERO};

fn term_entries(space: &HilbertSpace, term: &Term) -> Vec<MapEntry> {
    if let Some(map) = term.monomial(space) {
        return map.entries().to_vec();
    }
    let d = term.to_dense();
    let n = space.total();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if d[(i, j)] != ZERO {
                out.push(MapEntry {
                    row: i,
                    col: j,
                    weight: d[(i, j)],
                });
            }
        }
    }
    out
}

fn operator_entries(op: &QOperator) -> Vec<MapEntry> {
    let space = *op.space();
    match op.terms() {
        Some(terms) => terms.iter().flat_map(|t| term_entries(&space, t)).collect(),
        None => {
            let d = op.to_dense();
            let n = space.total();
            let mut out = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if d[(i, j)] != ZERO {
                        out.push(MapEntry {
                            row: i,
                            col: j,
                            weight: d[(i, j)],
                        });
                    }
                }
            }
            out
        }
    }
}

/// `−i·H(t) − ½Σ rate·Λ†Λ` as a static complex diagonal plus a list of
/// sparse entries, each tagged with the oscillation frequency of its term.
#[derive(Clone, Debug)]
pub(crate) struct Generator {
    pub n: usize,
    diag: Vec<C64>,
    rows: Vec<u32>,
    cols: Vec<u32>,
    weights: Vec<C64>,
    group: Vec<u32>,
    frequencies: Vec<f64>,
}

impl Generator {
    /// Builds `−i·H(t)`; decay terms are added with [`Generator::add_decay`].
    pub fn new(h: &TimeDependentOperator) -> Self {
        let space = *h.space();
        let n = space.total();
        let mut diag = vec![ZERO; n];
        let mut entries: Vec<(MapEntry, u32)> = Vec::new();
        let mut frequencies = Vec::new();
        for o in h.terms() {
            let e = term_entries(&space, &o.term);
            if o.frequency == 0.0 && e.iter().all(|x| x.row == x.col) {
                for x in e {
                    diag[x.row] += -I * x.weight;
                }
                continue;
            }
            let id = match frequencies.iter().position(|&f| f == o.frequency) {
                Some(p) => p,
                None => {
                    frequencies.push(o.frequency);
                    frequencies.len() - 1
                }
            } as u32;
            entries.extend(e.into_iter().map(|x| (x, id)));
        }
        entries.sort_by_key(|(e, _)| (e.row, e.col));
        Self {
            n,
            diag,
            rows: entries.iter().map(|(e, _)| e.row as u32).collect(),
            cols: entries.iter().map(|(e, _)| e.col as u32).collect(),
            weights: entries.iter().map(|(e, _)| -I * e.weight).collect(),
            group: entries.iter().map(|(_, g)| *g).collect(),
            frequencies,
        }
    }

    /// Adds `−½·rate·Λ†Λ`.
    pub fn add_decay(&mut self, jump: &Jump) {
        let n = self.n;
        // Λ†Λ[k, l] = Σ_i conj(Λ[i,k]) Λ[i,l]
        let mut by_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for (&r, (&c, &w)) in jump.rows.iter().zip(jump.cols.iter().zip(&jump.weights)) {
            by_row[r as usize].push((c as usize, w));
        }
        let mut extra: Vec<MapEntry> = Vec::new();
        for row in &by_row {
            for &(k, wk) in row {
                for &(l, wl) in row {
                    let v = -0.5 * jump.rate * wk.conj() * wl;
                    if k == l {
                        self.diag[k] += v;
                    } else {
                        extra.push(MapEntry { row: k, col: l, weight: v });
                    }
                }
            }
        }
        if extra.is_empty() {
            return;
        }
        let id = match self.frequencies.iter().position(|&f| f == 0.0) {
            Some(p) => p,
            None => {
                self.frequencies.push(0.0);
                self.frequencies.len() - 1
            }
        } as u32;
        for e in extra {
            self.rows.push(e.row as u32);
            self.cols.push(e.col as u32);
            self.weights.push(e.weight);
            self.group.push(id);
        }
    }

    /// Entry weights at time `t`, written into `buf`.
    fn weights_at(&self, t: f64, buf: &mut Vec<C64>) {
        let phases: Vec<C64> = self
            .frequencies
            .iter()
            .map(|&f| if f == 0.0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, f * t) })
            .collect();
        buf.clear();
        buf.extend(
            self.weights
                .iter()
                .zip(&self.group)
                .map(|(w, g)| w * phases[*g as usize]),
        );
    }

    /// `out = G(t)·x` for `x` with `cols` columns of length `n`.
    pub fn apply(&self, t: f64, x: &[C64], out: &mut [C64], cols: usize, buf: &mut Vec<C64>) {
        let n = self.n;
        self.weights_at(t, buf);
        for j in 0..cols {
            let xc = &x[j * n..(j + 1) * n];
            let oc = &mut out[j * n..(j + 1) * n];
            for i in 0..n {
                oc[i] = self.diag[i] * xc[i];
            }
            for k in 0..self.rows.len() {
                oc[self.rows[k] as usize] += buf[k] * xc[self.cols[k] as usize];
            }
        }
    }
}

impl Generator {
    /// `w = ρ·G(t)†` for Hermitian `ρ` (`n×n`, column-major). Column `r` of
    /// the result is a sum of scaled columns of `ρ`, so every update is a
    /// contiguous axpy.
    pub fn apply_right_adjoint(&self, t: f64, rho: &[C64], w: &mut [C64], buf: &mut Vec<C64>) {
        let n = self.n;
        self.weights_at(t, buf);
        for r in 0..n {
            let d = self.diag[r].conj();
            let (src, dst) = (&rho[r * n..(r + 1) * n], &mut w[r * n..(r + 1) * n]);
            for (o, x) in dst.iter_mut().zip(src) {
                *o = d * x;
            }
        }
        for k in 0..self.rows.len() {
            let (r, c) = (self.rows[k] as usize, self.cols[k] as usize);
            let f = buf[k].conj();
            let src = &rho[c * n..(c + 1) * n];
            let dst = &mut w[r * n..(r + 1) * n];
            for (o, x) in dst.iter_mut().zip(src) {
                *o += f * x;
            }
        }
    }
}

/// Collapse channel `Λ` with rate, as sparse triples sorted by row.
#[derive(Clone, Debug)]
pub(crate) struct Jump {
    rate: f64,
    rows: Vec<u32>,
    cols: Vec<u32>,
    weights: Vec<C64>,
    /// `row_start[j]`: first entry whose row is `≥ j`.
    row_start: Vec<usize>,
}

impl Jump {
    pub fn new(op: &QOperator, rate: f64) -> Self {
        let mut e = operator_entries(op);
        e.sort_by_key(|x| (x.row, x.col));
        let n = op.space().total();
        let row_start = (0..=n).map(|j| e.partition_point(|x| x.row < j)).collect();
        Self {
            rate,
            rows: e.iter().map(|x| x.row as u32).collect(),
            cols: e.iter().map(|x| x.col as u32).collect(),
            weights: e.iter().map(|x| x.weight).collect(),
            row_start,
        }
    }

    /// `out += rate · Λ ρ Λ†` on the lower triangle (`i ≥ j`) only; the
    /// result is Hermitian, so the rest follows by symmetry.
    pub fn add_sandwich_lower(&self, n: usize, rho: &[C64], out: &mut [C64]) {
        for b in 0..self.rows.len() {
            let j = self.rows[b] as usize;
            let dst = j * n;
            let src = self.cols[b] as usize * n;
            let f = self.rate * self.weights[b].conj();
            let oc = &mut out[dst..dst + n];
            let rc = &rho[src..src + n];
            for a in self.row_start[j]..self.rows.len() {
                oc[self.rows[a] as usize] += f * self.weights[a] * rc[self.cols[a] as usize];
            }
        }
    }
}

/// Master-equation generator with preallocated scratch space.
#[derive(Clone, Debug)]
pub(crate) struct LindbladKernel {
    generator: Generator,
    jumps: Vec<Jump>,
    z: Vec<C64>,
    sandwich: Vec<C64>,
    buf: Vec<C64>,
}

impl LindbladKernel {
    pub fn new(generator: Generator, jumps: Vec<Jump>) -> Self {
        let n = generator.n;
        Self {
            generator,
            jumps,
            z: vec![ZERO; n * n],
            sandwich: vec![ZERO; n * n],
            buf: Vec::new(),
        }
    }

    /// `dρ/dt` for Hermitian `ρ`: with `G = −iH − ½ΣΛ†Λ` and `W = ρG†`, the
    /// commutator and anticommutator parts are `W + W†`, and the jumps are
    /// added on top.
    pub fn eval(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.generator.n;
        self.generator.apply_right_adjoint(t, rho, &mut self.z, &mut self.buf);
        let has_jumps = !self.jumps.is_empty();
        if has_jumps {
            for j in 0..n {
                self.sandwich[j * n + j..(j + 1) * n].fill(ZERO);
            }
            for jump in &self.jumps {
                jump.add_sandwich_lower(n, rho, &mut self.sandwich);
            }
        }
        let (z, s) = (&self.z, &self.sandwich);
        const BLOCK: usize = 32;
        for jb in (0..n).step_by(BLOCK) {
            for ib in (0..n).step_by(BLOCK) {
                for j in jb..(jb + BLOCK).min(n) {
                    for i in ib..(ib + BLOCK).min(n) {
                        let mut v = z[i + n * j] + z[j + n * i].conj();
                        if has_jumps {
                            v += if i >= j { s[i + n * j] } else { s[j + n * i].conj() };
                        }
                        out[i + n * j] = v;
                    }
                }
            }
        }
    }
}

/// `dψ/dt = −i H(t) ψ`.
#[derive(Clone, Debug)]
pub(crate) struct SchrodingerKernel {
    generator: Generator,
    buf: Vec<C64>,
}

impl SchrodingerKernel {
    pub fn new(h: &TimeDependentOperator) -> Self {
        Self {
            generator: Generator::new(h),
            buf: Vec::new(),
        }
    }

    pub fn eval(&mut self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.generator.apply(t, psi, out, 1, &mut self.buf);
    }
}
