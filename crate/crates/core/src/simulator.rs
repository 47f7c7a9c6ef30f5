//! Shape-frequency simulator.
//!
//! Every series is Gaussian noise with a fixed number of copies of each shape
//! template added at random, non-overlapping positions. Classes differ only
//! in how often each shape occurs, so location carries no information.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};

const MAX_REJECTIONS: usize = 1000;

/// Offset applied to the seed when generating a matching test split.
const TEST_SEED_OFFSET: u64 = 0x7e57_0000_0000;

/// Symmetric triangular pulse peaking at 1.
pub fn spike(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let centre = (len - 1) as f64 / 2.0;
    (0..len).map(|t| 1.0 - (t as f64 - centre).abs() / centre).collect()
}

/// Zeros for the first half, ones for the second.
pub fn step(len: usize) -> Vec<f64> {
    (0..len).map(|t| if t < len / 2 { 0.0 } else { 1.0 }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_per_class: usize,
    pub m: usize,
    pub shapes: Vec<Vec<f64>>,
    /// `counts_per_class[c][s]` copies of shape `s` in every case of class `c`.
    pub counts_per_class: Vec<Vec<usize>>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_per_class: 50,
            m: 256,
            shapes: vec![spike(20), step(20)],
            counts_per_class: vec![vec![4, 1], vec![1, 4]],
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn with_shape_len(mut self, len: usize) -> Self {
        self.shapes = vec![spike(len), step(len)];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasiblePlacement(msg));
        if self.n_per_class == 0 || self.m == 0 {
            return bad("need at least one case per class and m > 0".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be finite and non-negative", self.noise_sigma));
        }
        if self.shapes.is_empty() || self.shapes.iter().any(|s| s.is_empty()) {
            return bad("shape templates must be non-empty".into());
        }
        if self.counts_per_class.len() < 2 {
            return bad("need at least two classes".into());
        }
        for (c, counts) in self.counts_per_class.iter().enumerate() {
            if counts.len() != self.shapes.len() {
                return bad(format!("class {c} has {} counts for {} shapes", counts.len(), self.shapes.len()));
            }
            let cover: usize = counts.iter().zip(&self.shapes).map(|(k, s)| k * s.len()).sum();
            if cover > self.m {
                return bad(format!("class {c} needs {cover} points of shapes in a series of length {}", self.m));
            }
        }
        for (i, a) in self.counts_per_class.iter().enumerate() {
            for b in &self.counts_per_class[i + 1..] {
                if a == b {
                    return bad("two classes share identical shape counts".into());
                }
            }
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.counts_per_class.len()
    }

    /// Reads a `key = value` file. Recognised keys: `n_per_class`, `m`,
    /// `shape_len`, `counts` (classes separated by `;`, shapes by `,`),
    /// `noise_sigma`, `seed`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        let mut shape_len = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;
            let value = value.trim();
            let num = |v: &str| -> Result<u64> { v.parse().map_err(|_| parse_err(format!("bad integer {v:?}"))) };
            match key.trim() {
                "n_per_class" => cfg.n_per_class = num(value)? as usize,
                "m" => cfg.m = num(value)? as usize,
                "shape_len" => shape_len = Some(num(value)? as usize),
                "seed" => cfg.seed = num(value)?,
                "noise_sigma" => {
                    cfg.noise_sigma = value.parse().map_err(|_| parse_err(format!("bad number {value:?}")))?
                }
                "counts" => {
                    cfg.counts_per_class = value
                        .split(';')
                        .map(|class| class.split(',').map(|c| num(c.trim()).map(|v| v as usize)).collect())
                        .collect::<Result<_>>()?
                }
                other => return Err(parse_err(format!("unknown key {other:?}"))),
            }
        }
        if let Some(len) = shape_len {
            cfg = cfg.with_shape_len(len);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimInstance {
    pub dataset: TimeSeriesDataset,
    /// Per case, `(shape index, start)` sorted by start.
    pub placements: Vec<Vec<(usize, usize)>>,
}

pub fn simulate(cfg: &SimConfig) -> Result<SimInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let n = cfg.n_per_class * cfg.n_classes();
    let mut series = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut placements = Vec::with_capacity(n);
    for (class, counts) in cfg.counts_per_class.iter().enumerate() {
        let ids: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(s, &k)| std::iter::repeat_n(s, k))
            .collect();
        for _ in 0..cfg.n_per_class {
            let mut x: Vec<f64> = if cfg.noise_sigma == 0.0 {
                vec![0.0; cfg.m]
            } else {
                (0..cfg.m).map(|_| noise.sample(&mut rng)).collect()
            };
            let placed = place(&ids, &cfg.shapes, cfg.m, &mut rng);
            for &(s, start) in &placed {
                for (v, t) in x[start..].iter_mut().zip(&cfg.shapes[s]) {
                    *v += t;
                }
            }
            series.push(x);
            labels.push(class);
            placements.push(placed);
        }
    }
    let names = (0..cfg.n_classes()).map(|c| c.to_string()).collect();
    let dataset = TimeSeriesDataset::new("sim", series, labels, names)?;
    Ok(SimInstance { dataset, placements })
}

/// Train and test instances from one configuration; the test split uses an
/// independent seed.
pub fn simulate_split(cfg: &SimConfig, test_per_class: usize) -> Result<(SimInstance, SimInstance)> {
    let train = simulate(cfg)?;
    let test_cfg = SimConfig {
        n_per_class: test_per_class,
        seed: cfg.seed.wrapping_add(TEST_SEED_OFFSET),
        ..cfg.clone()
    };
    Ok((train, simulate(&test_cfg)?))
}

fn place(ids: &[usize], shapes: &[Vec<f64>], m: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    if ids.is_empty() {
        return Vec::new();
    }
    for _ in 0..MAX_REJECTIONS {
        let mut drawn: Vec<(usize, usize)> = ids
            .iter()
            .map(|&s| (s, rng.random_range(0..=m - shapes[s].len())))
            .collect();
        drawn.sort_by_key(|&(_, start)| start);
        let disjoint = drawn
            .windows(2)
            .all(|w| w[0].1 + shapes[w[0].0].len() <= w[1].1);
        if disjoint {
            return drawn;
        }
    }
    pack(ids, shapes, m, rng)
}

/// Places the shapes in random order, splitting the free space into random
/// gaps. Always succeeds when total coverage fits.
fn pack(ids: &[usize], shapes: &[Vec<f64>], m: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut order = ids.to_vec();
    order.shuffle(rng);
    let free = m - order.iter().map(|&s| shapes[s].len()).sum::<usize>();
    let mut cuts: Vec<usize> = (0..order.len()).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(order.len());
    let mut pos = 0;
    let mut prev_cut = 0;
    for (s, cut) in order.into_iter().zip(cuts) {
        pos += cut - prev_cut;
        prev_cut = cut;
        out.push((s, pos));
        pos += shapes[s].len();
    }
    out
}

/// Cartesian product of series lengths and per-class train sizes, seeded
/// `base.seed + index`.
pub fn sweep_configs(base: &SimConfig, lengths: &[usize], train_sizes: &[usize]) -> Vec<SimConfig> {
    let mut out = Vec::with_capacity(lengths.len() * train_sizes.len());
    for &m in lengths {
        for &n in train_sizes {
            out.push(SimConfig {
                m,
                n_per_class: n,
                seed: base.seed.wrapping_add(out.len() as u64),
                ..base.clone()
            });
        }
    }
    out
}

/// Number of occurrences of each shape in a noise-free series, found by
/// exact template matching.
pub fn count_shapes(series: &[f64], shapes: &[Vec<f64>]) -> Vec<usize> {
    let mut counts = vec![0; shapes.len()];
    let mut t = 0;
    'scan: while t < series.len() {
        for (i, s) in shapes.iter().enumerate() {
            if series[t..].starts_with(s) {
                counts[i] += 1;
                t += s.len();
                continue 'scan;
            }
        }
        t += 1;
    }
    counts
}

/// Groups placements by shape: shape index to sorted starts.
pub fn starts_by_shape(placements: &[(usize, usize)]) -> BTreeMap<usize, Vec<usize>> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(s, start) in placements {
        map.entry(s).or_default().push(start);
    }
    map
}
