//! Binary objectives and incremental single-flip evaluation.
//!
//! Solvers are generic over [`Objective`]. A [`Walker`] holds a current bit
//! vector and answers "what would the value be if bit `i` flipped" without a
//! full re-evaluation, which is what makes annealing and tabu affordable at a
//! few thousand variables.

use num_complex::Complex64;

use crate::channels::ComplexGain;
use crate::error::{Error, Result};
use crate::metrics::{MetricModel, Metrics, BB84_QBER_LIMIT};
use crate::ris::{decode_phases, level_phase, Band, ChannelState, PhaseConfig, VariableLayout};

pub trait Objective {
    type Walker<'a>: Walker
    where
        Self: 'a;

    fn dim(&self) -> usize;

    /// Full evaluation. Panics if `bits.len() != self.dim()`.
    fn evaluate(&self, bits: &[bool]) -> f64;

    /// Whether `bits` satisfies the problem's side constraint.
    fn feasible(&self, _bits: &[bool]) -> bool {
        true
    }

    fn walker(&self, bits: &[bool]) -> Self::Walker<'_>;
}

pub trait Walker {
    fn bits(&self) -> &[bool];
    fn value(&self) -> f64;
    /// Objective value after flipping bit `i`, without applying the flip.
    fn flipped_value(&self, i: usize) -> f64;
    fn flip(&mut self, i: usize);
    fn feasible(&self) -> bool {
        true
    }
}

fn band_index(band: Band) -> usize {
    match band {
        Band::Quantum => 0,
        Band::Classical => 1,
    }
}

/// Ground-truth cost: decode, sum the composite channels, score the metrics.
/// No Taylor or log approximation anywhere.
#[derive(Debug, Clone)]
pub struct ExactObjective {
    state: ChannelState,
    layout: VariableLayout,
    model: MetricModel,
    direct: [Complex64; 2],
    /// `rotated[band][n * L + m] = g_n e^{j 2π m / L}`.
    rotated: [Vec<Complex64>; 2],
    /// `(element, band, bit)` per variable index.
    vars: Vec<(usize, Band, u32)>,
}

impl ExactObjective {
    pub fn new(state: ChannelState, layout: VariableLayout, model: MetricModel) -> Result<Self> {
        if layout.n_elements != state.n_elements() {
            return Err(Error::structural(format!(
                "layout has {} elements, channel state has {}",
                layout.n_elements,
                state.n_elements()
            )));
        }
        let rotate = |band: Band| -> Vec<Complex64> {
            let b = layout.bits(band);
            state
                .cascades(band)
                .iter()
                .flat_map(|g| {
                    (0..layout.levels(band) as u32)
                        .map(move |m| Complex64::from_polar(g.amplitude, g.phase_rad + level_phase(m, b)))
                })
                .collect()
        };
        let rotated = [rotate(Band::Quantum), rotate(Band::Classical)];
        let vars = (0..layout.dim()).map(|i| layout.variable(i)).collect::<Result<_>>()?;
        Ok(Self {
            direct: [state.direct_quantum.to_complex(), state.direct_classical.to_complex()],
            state,
            layout,
            model,
            rotated,
            vars,
        })
    }

    pub fn state(&self) -> &ChannelState {
        &self.state
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn model(&self) -> &MetricModel {
        &self.model
    }

    fn term(&self, band: Band, n: usize, level: u32) -> Complex64 {
        self.rotated[band_index(band)][n * self.layout.levels(band) + level as usize]
    }

    fn band_sum(&self, bits: &[bool], band: Band) -> Complex64 {
        (0..self.layout.n_elements)
            .fold(self.direct[band_index(band)], |acc, n| acc + self.term(band, n, self.layout.level(bits, n, band)))
    }

    fn check_len(&self, bits: &[bool]) -> Result<()> {
        if bits.len() == self.layout.dim() {
            Ok(())
        } else {
            Err(Error::structural(format!(
                "decision vector has {} bits, objective needs {}",
                bits.len(),
                self.layout.dim()
            )))
        }
    }

    /// Composite gains `(H_Q^tot, H_C^tot)` for `bits`.
    pub fn composite(&self, bits: &[bool]) -> Result<(ComplexGain, ComplexGain)> {
        self.check_len(bits)?;
        Ok((self.band_sum(bits, Band::Quantum).into(), self.band_sum(bits, Band::Classical).into()))
    }

    /// `(|H_Q^tot|², |H_C^tot|²)`.
    pub fn powers(&self, bits: &[bool]) -> Result<(f64, f64)> {
        self.check_len(bits)?;
        Ok((self.band_sum(bits, Band::Quantum).norm_sqr(), self.band_sum(bits, Band::Classical).norm_sqr()))
    }

    pub fn metrics(&self, bits: &[bool]) -> Result<Metrics> {
        let (pq, pc) = self.powers(bits)?;
        Ok(self.model.evaluate(pq, pc))
    }

    /// Metrics of the direct paths alone, as if the surface were absent.
    pub fn baseline_metrics(&self) -> Metrics {
        self.model.evaluate(self.direct[0].norm_sqr(), self.direct[1].norm_sqr())
    }

    pub fn qber(&self, bits: &[bool]) -> Result<f64> {
        Ok(self.model.qber(self.powers(bits)?.0))
    }

    pub fn phases(&self, bits: &[bool]) -> Result<PhaseConfig> {
        decode_phases(bits, &self.layout)
    }

    /// Checked variant of [`Objective::evaluate`].
    pub fn try_evaluate(&self, bits: &[bool]) -> Result<f64> {
        let (pq, pc) = self.powers(bits)?;
        Ok(self.model.cost(pq, pc))
    }
}

impl Objective for ExactObjective {
    type Walker<'a> = ExactWalker<'a>;

    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn evaluate(&self, bits: &[bool]) -> f64 {
        self.try_evaluate(bits).expect("decision vector length")
    }

    fn feasible(&self, bits: &[bool]) -> bool {
        self.qber(bits).expect("decision vector length") <= BB84_QBER_LIMIT
    }

    fn walker(&self, bits: &[bool]) -> ExactWalker<'_> {
        ExactWalker::new(self, bits)
    }
}

/// Flips between exact re-summations of the running complex totals.
const RESYNC_INTERVAL: u32 = 4096;

#[derive(Debug, Clone)]
pub struct ExactWalker<'a> {
    obj: &'a ExactObjective,
    bits: Vec<bool>,
    levels: [Vec<u32>; 2],
    sums: [Complex64; 2],
    powers: [f64; 2],
    value: f64,
    since_resync: u32,
}

impl<'a> ExactWalker<'a> {
    fn new(obj: &'a ExactObjective, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), obj.layout.dim(), "decision vector length");
        let levels = Band::BOTH.map(|band| (0..obj.layout.n_elements).map(|n| obj.layout.level(bits, n, band)).collect());
        let mut walker = Self {
            obj,
            bits: bits.to_vec(),
            levels,
            sums: [Complex64::default(); 2],
            powers: [0.0; 2],
            value: 0.0,
            since_resync: 0,
        };
        walker.resync();
        walker
    }

    fn resync(&mut self) {
        for band in Band::BOTH {
            let b = band_index(band);
            self.sums[b] = self.levels[b]
                .iter()
                .enumerate()
                .fold(self.obj.direct[b], |acc, (n, &m)| acc + self.obj.term(band, n, m));
            self.powers[b] = self.sums[b].norm_sqr();
        }
        self.value = self.obj.model.cost(self.powers[0], self.powers[1]);
        self.since_resync = 0;
    }

    fn value_with(&self, band: Band, power: f64) -> f64 {
        match band {
            Band::Quantum => self.obj.model.cost(power, self.powers[1]),
            Band::Classical => self.obj.model.cost(self.powers[0], power),
        }
    }

    fn moved_sum(&self, band: Band, n: usize, level: u32) -> Complex64 {
        let b = band_index(band);
        self.sums[b] - self.obj.term(band, n, self.levels[b][n]) + self.obj.term(band, n, level)
    }

    pub fn level(&self, n: usize, band: Band) -> u32 {
        self.levels[band_index(band)][n]
    }

    /// Value if element `n` took levels `(quantum, classical)`.
    pub fn element_value(&self, n: usize, quantum: u32, classical: u32) -> f64 {
        let pq = self.moved_sum(Band::Quantum, n, quantum).norm_sqr();
        let pc = self.moved_sum(Band::Classical, n, classical).norm_sqr();
        self.obj.model.cost(pq, pc)
    }

    /// Moves element `n` to levels `(quantum, classical)`.
    pub fn set_element(&mut self, n: usize, quantum: u32, classical: u32) {
        for (band, level) in [(Band::Quantum, quantum), (Band::Classical, classical)] {
            let b = band_index(band);
            self.sums[b] = self.moved_sum(band, n, level);
            self.powers[b] = self.sums[b].norm_sqr();
            self.levels[b][n] = level;
            for k in 0..self.obj.layout.bits(band) {
                let i = self.obj.layout.index_of(n, band, k).expect("element index");
                self.bits[i] = (level >> k) & 1 == 1;
            }
        }
        self.value = self.obj.model.cost(self.powers[0], self.powers[1]);
        self.tick();
    }

    fn tick(&mut self) {
        self.since_resync += 1;
        if self.since_resync >= RESYNC_INTERVAL {
            self.resync();
        }
    }

    pub fn qber(&self) -> f64 {
        self.obj.model.qber(self.powers[0])
    }
}

impl Walker for ExactWalker<'_> {
    fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn flipped_value(&self, i: usize) -> f64 {
        let (n, band, k) = self.obj.vars[i];
        let level = self.levels[band_index(band)][n] ^ (1 << k);
        self.value_with(band, self.moved_sum(band, n, level).norm_sqr())
    }

    fn flip(&mut self, i: usize) {
        let (n, band, k) = self.obj.vars[i];
        let b = band_index(band);
        let level = self.levels[b][n] ^ (1 << k);
        self.sums[b] = self.moved_sum(band, n, level);
        self.powers[b] = self.sums[b].norm_sqr();
        self.levels[b][n] = level;
        self.bits[i] = !self.bits[i];
        self.value = self.obj.model.cost(self.powers[0], self.powers[1]);
        self.tick();
    }

    fn feasible(&self) -> bool {
        self.qber() <= BB84_QBER_LIMIT
    }
}
