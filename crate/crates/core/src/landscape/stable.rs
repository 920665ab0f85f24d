//! t-stable points, separating peaks, wells and the origin landmarks.

use serde::{Deserialize, Serialize};

use super::valley::{depth_idx, WellRecord};
use super::{SampledFunction, TimeScale};
use crate::error::{Error, Result};

/// Sparse table answering leftmost-argmax queries on closed index ranges.
pub(crate) struct ArgMaxTable<'a> {
    values: &'a [f64],
    levels: Vec<Vec<u32>>,
}

impl<'a> ArgMaxTable<'a> {
    pub(crate) fn new(values: &'a [f64]) -> Self {
        let n = values.len();
        let mut levels: Vec<Vec<u32>> = vec![(0..n as u32).collect()];
        let mut width = 1;
        while 2 * width <= n {
            let prev = levels.last().unwrap();
            let next: Vec<u32> = (0..=n - 2 * width)
                .map(|i| Self::better(values, prev[i], prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self { values, levels }
    }

    fn better(values: &[f64], a: u32, b: u32) -> u32 {
        // leftmost wins ties; a < b whenever this is called
        if values[b as usize] > values[a as usize] {
            b
        } else {
            a
        }
    }

    /// Leftmost argmax on `[lo, hi]`.
    pub(crate) fn argmax(&self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let len = hi - lo + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let a = self.levels[k][lo];
        let b = self.levels[k][hi + 1 - (1 << k)];
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Self::better(self.values, a, b) as usize
    }

    pub(crate) fn max(&self, lo: usize, hi: usize) -> f64 {
        self.values[self.argmax(lo, hi)]
    }
}

/// Leftmost argmin on `[lo, hi]` by linear scan.
pub(crate) fn argmin(values: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo + 1..=hi {
        if values[i] < values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SideStatus {
    Barrier,
    Refuted,
    Unknown,
}

/// Result of scanning a sample for t-stable points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StablePoints {
    /// Indices into the sample, increasing.
    pub indices: Vec<usize>,
    /// Positions of the stable points.
    pub positions: Vec<f64>,
    /// Candidates that pass every in-window test but whose barrier on some
    /// side lies beyond the sample; they are excluded from `positions`.
    pub undecided: Vec<f64>,
}

impl StablePoints {
    /// Set when some candidate could not be decided inside the window.
    pub fn window_exhausted(&self) -> bool {
        !self.undecided.is_empty()
    }
}

pub(crate) fn scan_stable(values: &[f64], log_t: f64) -> (Vec<usize>, Vec<usize>) {
    let n = values.len();
    let table = ArgMaxTable::new(values);
    // previous index with value <= v[i]
    let mut prev_le = vec![usize::MAX; n];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..n {
        while let Some(&j) = stack.last() {
            if values[j] > values[i] {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(&j) = stack.last() {
            prev_le[i] = j;
        }
        stack.push(i);
    }
    // next index with value < v[i]
    let mut next_lt = vec![usize::MAX; n];
    stack.clear();
    for i in (0..n).rev() {
        while let Some(&j) = stack.last() {
            if values[j] >= values[i] {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(&j) = stack.last() {
            next_lt[i] = j;
        }
        stack.push(i);
    }

    let mut stable = Vec::new();
    let mut undecided = Vec::new();
    for i in 0..n {
        let threshold = values[i] + log_t;
        let left = {
            let (lo, bounded) = match prev_le[i] {
                usize::MAX => (0, false),
                p => (p + 1, true),
            };
            if table.max(lo, i) >= threshold {
                SideStatus::Barrier
            } else if bounded {
                SideStatus::Refuted
            } else {
                SideStatus::Unknown
            }
        };
        if left == SideStatus::Refuted {
            continue;
        }
        let right = {
            let (hi, bounded) = match next_lt[i] {
                usize::MAX => (n - 1, false),
                q => (q - 1, true),
            };
            if table.max(i, hi) >= threshold {
                SideStatus::Barrier
            } else if bounded {
                SideStatus::Refuted
            } else {
                SideStatus::Unknown
            }
        };
        match (left, right) {
            (SideStatus::Barrier, SideStatus::Barrier) => stable.push(i),
            (_, SideStatus::Refuted) => {}
            _ => undecided.push(i),
        }
    }
    (stable, undecided)
}

/// All t-stable points of `f` decidable inside the sample.
///
/// A point `m` is t-stable when it is the (leftmost) minimum of `f` between
/// the nearest points on either side where `f ≥ f(m) + log t`.
pub fn find_stable_points(f: &SampledFunction, t: TimeScale) -> StablePoints {
    let (indices, undecided) = scan_stable(f.values(), t.log_t());
    StablePoints {
        positions: indices.iter().map(|&i| f.position(i)).collect(),
        undecided: undecided.iter().map(|&i| f.position(i)).collect(),
        indices,
    }
}

fn peaks_between(f: &SampledFunction, stable: &[usize]) -> Vec<usize> {
    let table = ArgMaxTable::new(f.values());
    stable.windows(2).map(|w| table.argmax(w[0], w[1])).collect()
}

/// Peaks separating consecutive t-stable points: the leftmost argmax of `f`
/// between each consecutive pair. Returns positions.
pub fn find_peaks(f: &SampledFunction, t: TimeScale) -> Vec<f64> {
    let stable = find_stable_points(f, t);
    peaks_between(f, &stable.indices).into_iter().map(|i| f.position(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WellSide {
    Minus,
    Plus,
}

impl WellSide {
    pub const BOTH: [WellSide; 2] = [WellSide::Minus, WellSide::Plus];

    pub fn sign(self) -> &'static str {
        match self {
            WellSide::Minus => "-",
            WellSide::Plus => "+",
        }
    }
}

/// The eight points around the origin, as positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub m_minus: f64,
    pub h_minus: f64,
    pub m_minus_minus: f64,
    pub h_minus_minus: f64,
    pub m_plus: f64,
    pub h_plus: f64,
    pub m_plus_plus: f64,
    pub h_plus_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct LandmarkIndices {
    pub m_minus: usize,
    pub h_minus: usize,
    pub m_minus_minus: usize,
    pub h_minus_minus: usize,
    pub m_plus: usize,
    pub h_plus: usize,
    pub m_plus_plus: usize,
    pub h_plus_plus: usize,
}

/// Stable-well structure of a function at one time scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableLandscape {
    pub log_t: f64,
    pub stable_points: Vec<f64>,
    pub peaks: Vec<f64>,
    pub landmarks: Landmarks,
    /// Localization point: `m⁻` if `f(h⁺) > f(h⁻)`, `m⁺` if `f(h⁺) < f(h⁻)`.
    pub m_t: f64,
    pub m_t_side: WellSide,
    /// `f(h⁺) = f(h⁻)`; `m_t` was resolved to `m⁻`.
    pub tie: bool,
    pub wells: Vec<WellRecord>,
    #[serde(skip)]
    pub(crate) idx: Option<LandmarkIndices>,
}

impl StableLandscape {
    pub fn time_scale(&self) -> TimeScale {
        TimeScale::from_log(self.log_t).expect("constructed from a valid time scale")
    }

    /// The t-stable well whose bottom is at `m`.
    pub fn well_of(&self, m: f64) -> Option<&WellRecord> {
        self.wells.iter().find(|w| w.bottom == m)
    }

    pub fn bottom(&self, side: WellSide) -> f64 {
        match side {
            WellSide::Minus => self.landmarks.m_minus,
            WellSide::Plus => self.landmarks.m_plus,
        }
    }

    /// Well of `m⁻` or `m⁺`.
    pub fn side_well(&self, side: WellSide) -> &WellRecord {
        self.well_of(self.bottom(side)).expect("wells around m± resolve together with the landmarks")
    }

    /// `m_t` was chosen on the `+` side.
    pub fn m_t_is_plus(&self) -> bool {
        self.m_t_side == WellSide::Plus
    }
}

/// Build the full stable landscape; fails with [`Error::WindowExhausted`]
/// when the sample is too short for any of the eight landmarks.
pub fn stable_landscape(f: &SampledFunction, t: TimeScale) -> Result<StableLandscape> {
    let values = f.values();
    let stable = find_stable_points(f, t);
    let s = &stable.indices;
    let exhausted = |what: &str| {
        Error::WindowExhausted(format!(
            "{what} does not resolve inside [{}, {}] at log t = {}",
            f.position(0),
            f.position(f.len() - 1),
            t.log_t()
        ))
    };
    let n_le = f.positions().partition_point(|&p| p <= 0.0);
    let n_lt = f.positions().partition_point(|&p| p < 0.0);
    if n_le == 0 || n_lt == f.len() {
        return Err(exhausted("origin"));
    }
    let origin_le = n_le - 1; // last index with position <= 0
    let origin_ge = n_lt; // first index with position >= 0

    let k_minus = s.partition_point(|&i| f.position(i) <= 0.0);
    if k_minus == 0 {
        return Err(exhausted("m⁻"));
    }
    let k_plus = s.partition_point(|&i| f.position(i) < 0.0);
    if k_plus == s.len() {
        return Err(exhausted("m⁺"));
    }
    let m_minus = s[k_minus - 1];
    let m_plus = s[k_plus];
    if k_minus < 2 {
        return Err(exhausted("m⁻⁻"));
    }
    let m_minus_minus = s[k_minus - 2];
    // m⁺ coincides with m⁻ when the origin itself is stable
    let k_pp = k_plus + 1;
    if k_pp >= s.len() {
        return Err(exhausted("m⁺⁺"));
    }
    let m_plus_plus = s[k_pp];

    let table = ArgMaxTable::new(values);
    let h_minus = table.argmax(m_minus, origin_le);
    let h_plus = table.argmax(origin_ge, m_plus);
    let h_minus_minus = table.argmax(m_minus_minus, m_minus);
    let h_plus_plus = table.argmax(m_plus, m_plus_plus);

    let (m_t_side, tie) = if values[h_plus] > values[h_minus] {
        (WellSide::Minus, false)
    } else if values[h_plus] < values[h_minus] {
        (WellSide::Plus, false)
    } else {
        (WellSide::Minus, true)
    };
    let m_t = match m_t_side {
        WellSide::Minus => m_minus,
        WellSide::Plus => m_plus,
    };

    let peak_idx = peaks_between(f, s);
    let wells = s
        .iter()
        .enumerate()
        .filter(|&(k, _)| k > 0 && k + 1 < s.len())
        .map(|(k, &m)| {
            let (a, b) = (peak_idx[k - 1], peak_idx[k]);
            WellRecord {
                interval: (f.position(a), f.position(b)),
                bottom: f.position(m),
                depth_value: depth_idx(values, a, b),
            }
        })
        .collect();

    let idx = LandmarkIndices {
        m_minus,
        h_minus,
        m_minus_minus,
        h_minus_minus,
        m_plus,
        h_plus,
        m_plus_plus,
        h_plus_plus,
    };
    let pos = |i: usize| f.position(i);
    Ok(StableLandscape {
        log_t: t.log_t(),
        stable_points: stable.positions.clone(),
        peaks: peak_idx.iter().map(|&i| pos(i)).collect(),
        landmarks: Landmarks {
            m_minus: pos(m_minus),
            h_minus: pos(h_minus),
            m_minus_minus: pos(m_minus_minus),
            h_minus_minus: pos(h_minus_minus),
            m_plus: pos(m_plus),
            h_plus: pos(h_plus),
            m_plus_plus: pos(m_plus_plus),
            h_plus_plus: pos(h_plus_plus),
        },
        m_t: pos(m_t),
        m_t_side,
        tie,
        wells,
        idx: Some(idx),
    })
}
