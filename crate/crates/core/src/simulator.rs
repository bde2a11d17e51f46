//! Monte Carlo engines: the block-size death process started from an allelic
//! partition, the plain lineage death process, and the Pólya urn seeded with
//! unit atoms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ewens::AllelicPartition;

/// Independent stream for replicate `index` under `master_seed`.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn exp_holding<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate > 0.0 {
        rng.sample::<f64, _>(Exp1) / rate
    } else {
        f64::INFINITY
    }
}

/// Class sizes of the surviving ancestry: `D_l` for `l = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockState {
    // spectrum[l - 1] = D_l
    spectrum: Vec<usize>,
    x: usize,
}

impl BlockState {
    pub fn new(spectrum: Vec<usize>) -> Self {
        let x = spectrum.iter().enumerate().map(|(i, d)| (i + 1) * d).sum();
        Self { spectrum, x }
    }

    pub fn from_partition(p: &AllelicPartition) -> Self {
        let top = p.spectrum().keys().next_back().copied().unwrap_or(0);
        let mut spectrum = vec![0; top];
        for (&l, &c) in p.spectrum() {
            spectrum[l - 1] = c;
        }
        Self::new(spectrum)
    }

    /// `D_l`, zero beyond the largest class.
    pub fn d(&self, l: usize) -> usize {
        if l == 0 {
            return 0;
        }
        self.spectrum.get(l - 1).copied().unwrap_or(0)
    }

    pub fn spectrum(&self) -> &[usize] {
        &self.spectrum
    }

    /// `Σ l·D_l`, the number of surviving lineages.
    pub fn x(&self) -> usize {
        self.x
    }

    pub fn classes(&self) -> usize {
        self.spectrum.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.x == 0
    }

    pub fn rate(&self, theta: f64) -> f64 {
        let x = self.x as f64;
        x * (x + theta - 1.0) / 2.0
    }

    /// Removes one lineage, chosen uniformly, from its class.
    fn lose_one<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut u = rng.random_range(0..self.x);
        for i in 0..self.spectrum.len() {
            let w = (i + 1) * self.spectrum[i];
            if u < w {
                self.spectrum[i] -= 1;
                if i > 0 {
                    self.spectrum[i - 1] += 1;
                }
                self.x -= 1;
                return;
            }
            u -= w;
        }
        unreachable!("x is out of sync with the spectrum");
    }

    /// Advances one event in place and returns its holding time, which is
    /// infinite when the rate is zero (one lineage and `θ = 0`). The state is
    /// left untouched in that case.
    pub fn step_in_place<R: Rng + ?Sized>(&mut self, theta: f64, rng: &mut R) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Domain("block process is absorbed; no further events".into()));
        }
        let hold = exp_holding(self.rate(theta), rng);
        if hold.is_finite() {
            self.lose_one(rng);
        }
        Ok(hold)
    }

    fn run_to<R: Rng + ?Sized>(&mut self, theta: f64, horizon: f64, rng: &mut R) {
        let mut clock = 0.0;
        while !self.is_empty() {
            let hold = exp_holding(self.rate(theta), rng);
            clock += hold;
            if clock > horizon {
                break;
            }
            self.lose_one(rng);
        }
    }
}

/// One transition of the block process: the holding time and the next state.
pub fn step_block_process<R: Rng + ?Sized>(state: &BlockState, theta: f64, rng: &mut R) -> Result<(f64, BlockState)> {
    let mut next = state.clone();
    let hold = next.step_in_place(theta, rng)?;
    Ok((hold, next))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReplicateSummary {
    /// Surviving lineages `Σ l·D_l` at the horizon.
    pub d_total: usize,
    /// `D_1` at the horizon.
    pub d_singleton: usize,
    /// Surviving classes `Σ D_l`.
    pub classes: usize,
    pub seed: u64,
    pub replicate: u64,
}

fn check_horizon(theta: f64, t: f64) -> Result<()> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::Domain(format!("theta must be finite and >= 0, got {theta}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("horizon must be >= 0, got {t}")));
    }
    Ok(())
}

fn block_replicate(initial: &BlockState, theta: f64, t: f64, seed: u64, replicate: u64) -> ReplicateSummary {
    let mut state = initial.clone();
    state.run_to(theta, t, &mut replicate_rng(seed, replicate));
    ReplicateSummary {
        d_total: state.x(),
        d_singleton: state.d(1),
        classes: state.classes(),
        seed,
        replicate,
    }
}

/// Runs the block process from `initial` and reports the state in force at
/// time `t` (the last event at or before the horizon).
pub fn simulate_block_process(initial: &AllelicPartition, theta: f64, t: f64, seed: u64) -> Result<ReplicateSummary> {
    check_horizon(theta, t)?;
    Ok(block_replicate(&BlockState::from_partition(initial), theta, t, seed, 0))
}

pub fn death_process_with<R: Rng + ?Sized>(start_n: usize, theta: f64, t: f64, rng: &mut R) -> usize {
    let mut k = start_n;
    let mut clock = 0.0;
    while k > 0 {
        let kf = k as f64;
        clock += exp_holding(kf * (kf - 1.0 + theta) / 2.0, rng);
        if clock > t {
            break;
        }
        k -= 1;
    }
    k
}

/// Survivors at time `t` of the death process with rates `λ_k` started at `start_n`.
pub fn simulate_death_process(start_n: usize, theta: f64, t: f64, seed: u64) -> Result<usize> {
    check_horizon(theta, t)?;
    Ok(death_process_with(start_n, theta, t, &mut replicate_rng(seed, 0)))
}

/// Pólya urn over `n` unit atoms plus a diffuse part of mass `θ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UrnState {
    pub theta: f64,
    /// Draws landing on each atom.
    pub atom_hits: Vec<usize>,
    /// Sizes of the classes founded from the diffuse part, in order of appearance.
    pub new_classes: Vec<usize>,
    pub draws: usize,
}

impl UrnState {
    pub fn new(n_atoms: usize, theta: f64) -> Self {
        Self {
            theta,
            atom_hits: vec![0; n_atoms],
            new_classes: Vec::new(),
            draws: 0,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let total = self.theta + (self.atom_hits.len() + self.draws) as f64;
        let mut u = rng.random::<f64>() * total;
        self.draws += 1;
        for h in self.atom_hits.iter_mut() {
            let w = (1 + *h) as f64;
            if u < w {
                *h += 1;
                return;
            }
            u -= w;
        }
        for c in self.new_classes.iter_mut() {
            let w = *c as f64;
            if u < w {
                *c += 1;
                return;
            }
            u -= w;
        }
        self.new_classes.push(1);
    }

    /// `R`: atoms hit at least once.
    pub fn atoms_hit(&self) -> usize {
        self.atom_hits.iter().filter(|&&h| h > 0).count()
    }

    /// `R_l`: atoms hit exactly `l` times.
    pub fn atoms_hit_exactly(&self, l: usize) -> usize {
        self.atom_hits.iter().filter(|&&h| h == l).count()
    }
}

/// `m_draws` sequential draws from the urn seeded with `n_atoms` atoms.
pub fn urn_forward_sample(n_atoms: usize, m_draws: usize, theta: f64, seed: u64) -> Result<UrnState> {
    if !(theta > 0.0 && theta.is_finite()) && !(theta == 0.0 && n_atoms > 0) {
        return Err(Error::Domain(format!("urn needs positive total mass, got theta={theta}, n={n_atoms}")));
    }
    let mut rng = replicate_rng(seed, 0);
    let mut urn = UrnState::new(n_atoms, theta);
    for _ in 0..m_draws {
        urn.draw(&mut rng);
    }
    Ok(urn)
}

/// Counts of non-negative integer outcomes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn add(&mut self, value: usize) {
        if value >= self.counts.len() {
            self.counts.resize(value + 1, 0);
        }
        self.counts[value] += 1;
        self.total += 1;
    }

    pub fn merge(mut self, other: Histogram) -> Histogram {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.total += other.total;
        self
    }

    pub fn count(&self, value: usize) -> u64 {
        self.counts.get(value).copied().unwrap_or(0)
    }

    pub fn frequency(&self, value: usize) -> f64 {
        self.count(value) as f64 / self.total as f64
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self.counts.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
        s / self.total as f64
    }

    /// Shortest window `[lo, hi]` holding at least `level` of the counts; among
    /// equally short windows the one with the smaller `lo`.
    pub fn narrowest_interval(&self, level: f64) -> Option<(usize, usize)> {
        if self.total == 0 {
            return None;
        }
        let need = ((level * self.total as f64) - 1e-9).ceil().max(1.0) as u64;
        let n = self.counts.len();
        let mut best: Option<(usize, usize)> = None;
        let mut hi = 0;
        let mut inside = 0u64;
        // two pointers: for each lo, the smallest hi reaching `need`
        for lo in 0..n {
            while inside < need && hi < n {
                inside += self.counts[hi];
                hi += 1;
            }
            if inside < need {
                break;
            }
            let cand = (lo, hi - 1);
            if best.is_none_or(|b| cand.1 - cand.0 < b.1 - b.0) {
                best = Some(cand);
            }
            inside -= self.counts[lo];
        }
        best
    }
}

/// Histograms of the block-process summaries over many replicates.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BlockReport {
    pub d_total: Histogram,
    pub d_singleton: Histogram,
    pub classes: Histogram,
}

/// Runs `replicates` independent replicates in parallel; replicate `i` draws
/// from `replicate_rng(master_seed, i)`, so the result does not depend on the
/// thread count.
pub fn replicate_histograms<F, const K: usize>(replicates: u64, master_seed: u64, f: F) -> [Histogram; K]
where
    F: Fn(&mut ChaCha8Rng) -> [usize; K] + Sync,
{
    (0..replicates)
        .into_par_iter()
        .fold(
            || std::array::from_fn(|_| Histogram::default()),
            |mut acc: [Histogram; K], i| {
                let out = f(&mut replicate_rng(master_seed, i));
                for (h, v) in acc.iter_mut().zip(out) {
                    h.add(v);
                }
                acc
            },
        )
        .reduce(
            || std::array::from_fn(|_| Histogram::default()),
            |a, b| {
                let mut it = b.into_iter();
                a.map(|h| h.merge(it.next().unwrap()))
            },
        )
}

pub fn run_block_replicates(
    initial: &AllelicPartition,
    theta: f64,
    t: f64,
    replicates: u64,
    master_seed: u64,
) -> Result<BlockReport> {
    check_horizon(theta, t)?;
    if replicates == 0 {
        return Err(Error::Domain("replicates must be at least 1".into()));
    }
    let start = BlockState::from_partition(initial);
    let [d_total, d_singleton, classes] = replicate_histograms(replicates, master_seed, |rng| {
        let mut s = start.clone();
        s.run_to(theta, t, rng);
        [s.x(), s.d(1), s.classes()]
    });
    Ok(BlockReport {
        d_total,
        d_singleton,
        classes,
    })
}

pub fn run_death_replicates(start_n: usize, theta: f64, t: f64, replicates: u64, master_seed: u64) -> Result<Histogram> {
    check_horizon(theta, t)?;
    let [h] = replicate_histograms(replicates, master_seed, |rng| [death_process_with(start_n, theta, t, rng)]);
    Ok(h)
}
