use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::path_rng;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Normalizers, StepTable};

/// How a path is generated. Both backends induce the same law of
/// `(S_1, ..., S_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimBackend {
    /// Draw `X_{n+1} = +1` with probability `(1 + E[X_{n+1} | F_n]) / 2`;
    /// only `S_n` is kept.
    StateOnly,
    /// Keep the whole increment history; with probability `α_{n+1}` copy a
    /// uniformly chosen past step and keep its sign with probability `p`,
    /// otherwise take a fresh `β_{n+1}`-biased step.
    MemorySampling,
}

/// One simulated trajectory, observed at the checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRun {
    pub seed: u64,
    pub n_max: usize,
    pub checkpoints: Arc<[usize]>,
    /// `S_n` at each checkpoint.
    pub s_at: Vec<i64>,
    /// `M_{n_max} = (S_{n_max} − E[S_{n_max}]) / a_{n_max}`, the stand-in
    /// for the almost-sure limit `M`.
    pub m_hat: f64,
}

impl PathRun {
    /// `S_n` if `n` is a checkpoint.
    pub fn s(&self, n: usize) -> Option<i64> {
        self.checkpoints.binary_search(&n).ok().map(|i| self.s_at[i])
    }
}

pub(crate) fn validate_checkpoints(checkpoints: &[usize], n_max: usize) -> Result<()> {
    if let Some(w) = checkpoints.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCheckpoints(format!(
            "checkpoints must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(&last) = checkpoints.last() {
        if last > n_max {
            return Err(Error::InvalidCheckpoints(format!(
                "checkpoint {last} exceeds n_max = {n_max}"
            )));
        }
    }
    Ok(())
}

/// Bit-packed `±1` increment history.
struct History {
    words: Vec<u64>,
    len: usize,
}

impl History {
    fn with_capacity(n: usize) -> Self {
        Self {
            words: Vec::with_capacity(n.div_ceil(64)),
            len: 0,
        }
    }

    #[inline]
    fn push(&mut self, up: bool) {
        let bit = self.len % 64;
        if bit == 0 {
            self.words.push(0);
        }
        if up {
            *self.words.last_mut().expect("word pushed above") |= 1 << bit;
        }
        self.len += 1;
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }
}

/// Per-ensemble state shared by every path: coefficient tables,
/// normalizers and the checkpoint grid.
pub struct PathSimulator<'a> {
    norm: &'a Normalizers,
    table: StepTable,
    p: f64,
    n_max: usize,
    checkpoints: Arc<[usize]>,
}

impl<'a> PathSimulator<'a> {
    pub fn new(
        params: &ModelParams,
        norm: &'a Normalizers,
        n_max: usize,
        checkpoints: &[usize],
    ) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if n_max > norm.n_max() {
            return Err(Error::NormalizerTooShort {
                need: n_max,
                have: norm.n_max(),
            });
        }
        validate_checkpoints(checkpoints, n_max)?;
        Ok(Self {
            norm,
            table: StepTable::new(params, n_max),
            p: params.p,
            n_max,
            checkpoints: checkpoints.into(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn checkpoints(&self) -> &Arc<[usize]> {
        &self.checkpoints
    }

    pub fn run(&self, seed: u64, backend: SimBackend) -> PathRun {
        let mut recorder = Recorder::new(&self.checkpoints, self.norm);
        let s = match backend {
            SimBackend::StateOnly => self.run_state_only(seed, &mut recorder),
            SimBackend::MemorySampling => self.run_memory_sampling(seed, &mut recorder),
        };
        PathRun {
            seed,
            n_max: self.n_max,
            checkpoints: Arc::clone(&self.checkpoints),
            s_at: recorder.values,
            m_hat: self.norm.martingale(self.n_max, s),
        }
    }

    fn run_state_only(&self, seed: u64, recorder: &mut Recorder<'_>) -> i64 {
        let mut rng = path_rng(seed);
        // X_{n+1} = +1 iff 2U − 1 < slope_n S_n + offset_n. The clamp of the
        // conditional mean to [-1, 1] never changes this comparison, and
        // keeping S_n in an f64 keeps the loop-carried chain short.
        let mut s = 0.0f64;
        let coeffs = self.table.slope.iter().zip(&self.table.offset);
        for (n, (&slope, &offset)) in coeffs.enumerate().take(self.n_max) {
            let v = 2.0 * rng.random::<f64>() - 1.0 - offset;
            s += if v < slope * s { 1.0 } else { -1.0 };
            recorder.step(n + 1, s as i64);
        }
        s as i64
    }

    fn run_memory_sampling(&self, seed: u64, recorder: &mut Recorder<'_>) -> i64 {
        let mut rng = path_rng(seed);
        let mut history = History::with_capacity(self.n_max);
        let first = rng.random::<f64>() < 0.5 * (1.0 + self.table.offset[0]);
        history.push(first);
        let mut s: i64 = if first { 1 } else { -1 };
        recorder.step(1, s);
        for n in 1..self.n_max {
            let up = if rng.random::<f64>() < self.table.alpha[n + 1] {
                // U uniform on {1, ..., n}
                let past = history.get(rng.random_range(0..n));
                let keep = rng.random::<f64>() < self.p;
                past == keep
            } else {
                rng.random::<f64>() < self.table.beta[n + 1]
            };
            history.push(up);
            s += if up { 1 } else { -1 };
            recorder.step(n + 1, s);
        }
        s
    }
}

/// Collects `S_n` at checkpoints and, in debug builds, checks the martingale
/// increment bound `|M_n − M_{n−1}| <= 2 / a_n` on every step.
struct Recorder<'c> {
    checkpoints: &'c [usize],
    next: usize,
    values: Vec<i64>,
    #[cfg(debug_assertions)]
    norm: &'c Normalizers,
    #[cfg(debug_assertions)]
    prev_m: f64,
}

impl<'c> Recorder<'c> {
    fn new(checkpoints: &'c [usize], _norm: &'c Normalizers) -> Self {
        let mut values = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        while next < checkpoints.len() && checkpoints[next] == 0 {
            values.push(0);
            next += 1;
        }
        Self {
            checkpoints,
            next,
            values,
            #[cfg(debug_assertions)]
            norm: _norm,
            #[cfg(debug_assertions)]
            prev_m: 0.0,
        }
    }

    #[inline(always)]
    fn step(&mut self, n: usize, s: i64) {
        #[cfg(debug_assertions)]
        {
            let m = self.norm.martingale(n, s);
            let bound = 2.0 / self.norm.a(n);
            debug_assert!(
                (m - self.prev_m).abs() <= bound * (1.0 + 1e-9) + 1e-12,
                "increment bound violated at n = {n}: |{m} - {}| > {bound}",
                self.prev_m
            );
            self.prev_m = m;
        }
        if self.next < self.checkpoints.len() && self.checkpoints[self.next] == n {
            self.values.push(s);
            self.next += 1;
        }
    }
}

/// Simulates one path with its own seed.
pub fn simulate_path(
    params: &ModelParams,
    norm: &Normalizers,
    n_max: usize,
    checkpoints: &[usize],
    seed: u64,
    backend: SimBackend,
) -> Result<PathRun> {
    Ok(PathSimulator::new(params, norm, n_max, checkpoints)?.run(seed, backend))
}
