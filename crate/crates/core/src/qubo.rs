//! Quadratic binary model of the joint phase-selection cost.
//!
//! Each band's `|H^tot|²` is a sum of cosines of phase differences. Around an
//! expansion point every cosine is replaced by its second-order Taylor
//! polynomial in the (affine-in-bits) phase offset, and the cost is linearised
//! in the two band powers, which leaves a model of the form
//! `Σ_i c_i x_i + Σ_{i<j} J_ij x_i x_j + offset`.
//!
//! The model is exact at the expansion point and drifts away from the exact
//! objective as phases move; [`expansion_error`] measures by how much.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::objective::{ExactObjective, Objective, Walker};
use crate::ris::{level_phase, Band, VariableLayout};
use crate::rng::rng_from_seed;

/// `Σ c_i x_i + Σ_{i<j} J_ij x_i x_j + offset` with `x_i ∈ {0, 1}`.
///
/// Couplings are stored once per unordered pair. The symmetric matrix form
/// `xᵀQx` has `Q_ij = Q_ji = J_ij / 2` and a zero diagonal, the diagonal
/// having been folded into `c` via `x² = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    dim: usize,
    linear: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
    offset: f64,
    layout: Option<VariableLayout>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl QuboModel {
    /// Builds a model from linear terms and `(i, j, J_ij)` triples.
    ///
    /// Triples may come in any order and either orientation; duplicates are
    /// summed and `i == j` entries fold into the linear term.
    pub fn new(linear: Vec<f64>, couplings: Vec<(usize, usize, f64)>, offset: f64) -> Result<Self> {
        let dim = linear.len();
        let mut linear = linear;
        let mut pairs = Vec::with_capacity(couplings.len());
        for (i, j, v) in couplings {
            if i >= dim || j >= dim {
                return Err(Error::structural(format!("coupling ({i}, {j}) outside dim {dim}")));
            }
            if i == j {
                linear[i] += v;
            } else {
                pairs.push((i.min(j), i.max(j), v));
            }
        }
        pairs.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, j, v) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);
        let mut adjacency = vec![Vec::new(); dim];
        for &(i, j, v) in &merged {
            adjacency[i].push((j, v));
            adjacency[j].push((i, v));
        }
        Ok(Self { dim, linear, couplings: merged, offset, layout: None, adjacency })
    }

    /// From a square matrix `Q` (any symmetry) and linear vector `c`, for
    /// `xᵀQx + cᵀx + offset`.
    pub fn from_dense(q: &[Vec<f64>], c: Vec<f64>, offset: f64) -> Result<Self> {
        if q.len() != c.len() || q.iter().any(|row| row.len() != c.len()) {
            return Err(Error::structural("Q must be square with the same size as c"));
        }
        let triples = q
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)))
            .filter(|&(_, _, v)| v != 0.0)
            .collect();
        Self::new(c, triples, offset)
    }

    pub fn with_layout(mut self, layout: VariableLayout) -> Result<Self> {
        if layout.dim() != self.dim {
            return Err(Error::structural(format!("layout dim {} != model dim {}", layout.dim(), self.dim)));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Upper-triangular couplings `(i, j, J_ij)`, `i < j`, sorted.
    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn layout(&self) -> Option<&VariableLayout> {
        self.layout.as_ref()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Dense symmetric `Q` with zero diagonal.
    pub fn dense_symmetric(&self) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.dim]; self.dim];
        for &(i, j, v) in &self.couplings {
            q[i][j] = 0.5 * v;
            q[j][i] = 0.5 * v;
        }
        q
    }

    fn value_unchecked(&self, x: &[bool]) -> f64 {
        let lin: f64 = self.linear.iter().zip(x).filter(|(_, &xi)| xi).map(|(c, _)| c).sum();
        let quad: f64 = self.couplings.iter().filter(|&&(i, j, _)| x[i] && x[j]).map(|&(_, _, v)| v).sum();
        self.offset + lin + quad
    }

    /// Index of bit `k` of element `n` in `band`, via the attached layout.
    pub fn index_of(&self, n: usize, band: Band, k: u32) -> Result<usize> {
        self.layout
            .as_ref()
            .ok_or_else(|| Error::structural("model has no variable layout"))?
            .index_of(n, band, k)
    }
}

/// `xᵀQx + cᵀx + offset`.
pub fn eval_quadratic(model: &QuboModel, x: &[bool]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(Error::structural(format!("vector has {} bits, model dim is {}", x.len(), model.dim)));
    }
    Ok(model.value_unchecked(x))
}

/// Exact cost of `x`; the objective of record.
pub fn eval_exact(objective: &ExactObjective, x: &[bool]) -> Result<f64> {
    objective.try_evaluate(x)
}

impl Objective for QuboModel {
    type Walker<'a> = QuboWalker<'a>;

    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, bits: &[bool]) -> f64 {
        assert_eq!(bits.len(), self.dim, "decision vector length");
        self.value_unchecked(bits)
    }

    fn walker(&self, bits: &[bool]) -> QuboWalker<'_> {
        assert_eq!(bits.len(), self.dim, "decision vector length");
        let field = (0..self.dim)
            .map(|i| {
                self.linear[i] + self.adjacency[i].iter().filter(|&&(j, _)| bits[j]).map(|&(_, v)| v).sum::<f64>()
            })
            .collect();
        QuboWalker { model: self, bits: bits.to_vec(), field, value: self.value_unchecked(bits) }
    }
}

/// Maintains the local fields `c_i + Σ_j J_ij x_j`.
#[derive(Debug, Clone)]
pub struct QuboWalker<'a> {
    model: &'a QuboModel,
    bits: Vec<bool>,
    field: Vec<f64>,
    value: f64,
}

impl Walker for QuboWalker<'_> {
    fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn flipped_value(&self, i: usize) -> f64 {
        if self.bits[i] {
            self.value - self.field[i]
        } else {
            self.value + self.field[i]
        }
    }

    fn flip(&mut self, i: usize) {
        self.value = self.flipped_value(i);
        self.bits[i] = !self.bits[i];
        let sign = if self.bits[i] { 1.0 } else { -1.0 };
        for &(j, v) in &self.model.adjacency[i] {
            self.field[j] += sign * v;
        }
    }
}

/// Polynomial under construction.
struct Accumulator {
    linear: Vec<f64>,
    pairs: Vec<(usize, usize, f64)>,
    offset: f64,
}

impl Accumulator {
    /// Adds `coef · T₂[cos](c; v)` with `v = Σ α_t x_t + β` and
    /// `T₂[cos](c; v) = cos c - sin c · v - ½ cos c · v²`.
    fn add_cosine(&mut self, coef: f64, c: f64, v: &[(usize, f64)], beta: f64) {
        if coef == 0.0 {
            return;
        }
        let (s, k) = c.sin_cos();
        self.offset += coef * (k - s * beta - 0.5 * k * beta * beta);
        for (idx, &(t, a)) in v.iter().enumerate() {
            self.linear[t] += coef * (-s * a - 0.5 * k * (a * a + 2.0 * beta * a));
            for &(u, b) in &v[idx + 1..] {
                self.pairs.push((t, u, -coef * k * a * b));
            }
        }
    }
}

/// Quadratic model of the exact objective around `expansion_point`.
pub fn build_qubo(objective: &ExactObjective, expansion_point: &[bool]) -> Result<QuboModel> {
    let layout = *objective.layout();
    let (pq0, pc0) = objective.powers(expansion_point)?;
    let model = objective.model();
    let f0 = model.cost(pq0, pc0);
    let mut acc = Accumulator { linear: vec![0.0; layout.dim()], pairs: Vec::new(), offset: f0 };
    let state = objective.state();

    for (band, slope, p0) in [
        (Band::Quantum, model.cost_slope_quantum(pq0), pq0),
        (Band::Classical, model.cost_slope_classical(pc0), pc0),
    ] {
        let b = layout.bits(band);
        let weights: Vec<f64> = (0..b).map(|k| level_phase(1 << k, b)).collect();
        let direct = state.direct(band);
        let cascades = state.cascades(band);
        let theta0: Vec<f64> = (0..layout.n_elements)
            .map(|n| level_phase(layout.level(expansion_point, n, band), b))
            .collect();
        let vars = |n: usize, sign: f64| -> Result<Vec<(usize, f64)>> {
            (0..b).map(|k| Ok((layout.index_of(n, band, k)?, sign * weights[k as usize]))).collect()
        };

        acc.offset -= slope * p0;
        acc.offset += slope * direct.power();
        let mut band_acc = Accumulator { linear: vec![0.0; layout.dim()], pairs: Vec::new(), offset: 0.0 };
        for (n, g) in cascades.iter().enumerate() {
            band_acc.offset += g.amplitude * g.amplitude;
            let c = g.phase_rad + theta0[n] - direct.phase_rad;
            band_acc.add_cosine(2.0 * direct.amplitude * g.amplitude, c, &vars(n, 1.0)?, -theta0[n]);
        }
        for m in 0..cascades.len() {
            let vm = vars(m, 1.0)?;
            for n in m + 1..cascades.len() {
                let (gm, gn) = (cascades[m], cascades[n]);
                let coef = 2.0 * gm.amplitude * gn.amplitude;
                if coef == 0.0 {
                    continue;
                }
                let c = gm.phase_rad - gn.phase_rad + theta0[m] - theta0[n];
                let mut v = vm.clone();
                v.extend(vars(n, -1.0)?);
                band_acc.add_cosine(coef, c, &v, theta0[n] - theta0[m]);
            }
        }
        acc.offset += slope * band_acc.offset;
        for (total, part) in acc.linear.iter_mut().zip(&band_acc.linear) {
            *total += slope * part;
        }
        acc.pairs.extend(band_acc.pairs.into_iter().map(|(i, j, v)| (i, j, slope * v)));
    }

    QuboModel::new(acc.linear, acc.pairs, acc.offset)?.with_layout(layout)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    /// Largest `|quadratic - exact| / (|exact| + ε)` over the samples.
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    pub samples: usize,
}

/// Samples uniformly random bit vectors and compares the quadratic model
/// built about the all-zero configuration with the exact objective.
pub fn expansion_error(objective: &ExactObjective, samples: usize, seed: u64) -> Result<ExpansionReport> {
    let zero = vec![false; objective.dim()];
    let model = build_qubo(objective, &zero)?;
    expansion_error_of(objective, &model, samples, seed)
}

/// As [`expansion_error`] for an already built model.
pub fn expansion_error_of(
    objective: &ExactObjective,
    model: &QuboModel,
    samples: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    if samples == 0 {
        return Err(Error::domain("expansion_error needs at least one sample"));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = vec![false; objective.dim()];
    let (mut max, mut sum) = (0.0f64, 0.0);
    for _ in 0..samples {
        x.iter_mut().for_each(|b| *b = rng.random());
        let exact = objective.try_evaluate(&x)?;
        let approx = eval_quadratic(model, &x)?;
        let dev = (approx - exact).abs() / (exact.abs() + f64::EPSILON);
        max = max.max(dev);
        sum += dev;
    }
    Ok(ExpansionReport { max_abs_deviation: max, mean_abs_deviation: sum / samples as f64, samples })
}

/// Writes the plain-text sparse triplet format.
///
/// ```text
/// # comment lines start with '#'
/// # layout <n_elements> <bits_quantum> <bits_classical>
/// qubo <dim> <n_linear> <n_quadratic> <offset>
/// i i c_i
/// i j J_ij
/// ```
///
/// Indices are zero-based, values use 17 significant digits so the round
/// trip is exact.
pub fn write_qubo<W: Write>(model: &QuboModel, out: &mut W, comments: &[String]) -> Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    if let Some(l) = &model.layout {
        writeln!(out, "# layout {} {} {}", l.n_elements, l.bits_quantum, l.bits_classical)?;
    }
    writeln!(out, "qubo {} {} {} {:.16e}", model.dim, model.dim, model.couplings.len(), model.offset)?;
    for (i, c) in model.linear.iter().enumerate() {
        writeln!(out, "{i} {i} {c:.16e}")?;
    }
    for &(i, j, v) in &model.couplings {
        writeln!(out, "{i} {j} {v:.16e}")?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    token.parse().map_err(|_| Error::Parse { line, msg: format!("bad {what} '{token}'") })
}

/// Reads the format produced by [`write_qubo`].
pub fn read_qubo<R: BufRead>(input: R) -> Result<QuboModel> {
    let mut layout = None;
    let mut header: Option<(usize, usize, usize, f64)> = None;
    let mut linear = Vec::new();
    let mut couplings = Vec::new();
    let (mut n_lin, mut n_quad) = (0, 0);
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("layout") {
                layout = Some(VariableLayout::new(
                    parse_field(it.next(), line_no, "layout element count")?,
                    parse_field(it.next(), line_no, "layout quantum bits")?,
                    parse_field(it.next(), line_no, "layout classical bits")?,
                ));
            }
            continue;
        }
        let mut it = line.split_whitespace();
        match header {
            None => {
                if it.next() != Some("qubo") {
                    return Err(Error::Parse { line: line_no, msg: "expected 'qubo' header".into() });
                }
                let dim = parse_field(it.next(), line_no, "dim")?;
                header = Some((
                    dim,
                    parse_field(it.next(), line_no, "linear count")?,
                    parse_field(it.next(), line_no, "quadratic count")?,
                    parse_field(it.next(), line_no, "offset")?,
                ));
                linear = vec![0.0; dim];
            }
            Some((dim, ..)) => {
                let i: usize = parse_field(it.next(), line_no, "row index")?;
                let j: usize = parse_field(it.next(), line_no, "column index")?;
                let v: f64 = parse_field(it.next(), line_no, "value")?;
                if i >= dim || j >= dim {
                    return Err(Error::Parse { line: line_no, msg: format!("index ({i}, {j}) outside dim {dim}") });
                }
                if i == j {
                    linear[i] += v;
                    n_lin += 1;
                } else if i < j {
                    couplings.push((i, j, v));
                    n_quad += 1;
                } else {
                    return Err(Error::Parse { line: line_no, msg: format!("quadratic entry ({i}, {j}) needs i < j") });
                }
            }
        }
        if it.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: "trailing tokens".into() });
        }
    }
    let (_, want_lin, want_quad, offset) =
        header.ok_or_else(|| Error::Parse { line: 0, msg: "missing 'qubo' header".into() })?;
    if n_lin != want_lin || n_quad != want_quad {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header announces {want_lin}/{want_quad} entries, found {n_lin}/{n_quad}"),
        });
    }
    let model = QuboModel::new(linear, couplings, offset)?;
    match layout {
        Some(l) => model.with_layout(l),
        None => Ok(model),
    }
}
