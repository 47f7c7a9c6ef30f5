use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

const MIN_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln x, ln y)`. `None` with fewer than two
/// distinct `x` or any non-positive value.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub classifier: String,
    /// Series length.
    pub m: usize,
    /// Training cases.
    pub n: usize,
    pub fit_time_ns: u64,
    pub peak_memory_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub classifier: String,
    /// `"m"` or `"n"`.
    pub axis: String,
    /// Value of the other axis, held fixed.
    pub fixed: usize,
    pub points: usize,
    pub time: Option<LogLogFit>,
    pub memory: Option<LogLogFit>,
}

/// Log-log slopes of fit time and peak memory against `m` (for each fixed
/// `n`) and against `n` (for each fixed `m`), wherever at least four
/// distinct values were swept. Repeated points are averaged.
pub fn scaling_report(points: &[ScalingPoint]) -> Vec<ScalingRow> {
    type Key = (String, usize, usize);
    let mut grouped: BTreeMap<Key, (f64, f64, usize)> = BTreeMap::new();
    for p in points {
        let e = grouped.entry((p.classifier.clone(), p.m, p.n)).or_insert((0.0, 0.0, 0));
        e.0 += p.fit_time_ns as f64;
        e.1 += p.peak_memory_bytes as f64;
        e.2 += 1;
    }
    let mean: Vec<(Key, f64, f64)> = grouped
        .into_iter()
        .map(|(k, (t, mem, c))| (k, t / c as f64, mem / c as f64))
        .collect();

    let mut rows = Vec::new();
    for axis in ["m", "n"] {
        let mut series: BTreeMap<(String, usize), Vec<(f64, f64, f64)>> = BTreeMap::new();
        for ((name, m, n), t, mem) in &mean {
            let (x, fixed) = if axis == "m" { (*m, *n) } else { (*n, *m) };
            series.entry((name.clone(), fixed)).or_default().push((x as f64, *t, *mem));
        }
        for ((classifier, fixed), pts) in series {
            if pts.len() < MIN_POINTS {
                continue;
            }
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ts: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let ms: Vec<f64> = pts.iter().map(|p| p.2).collect();
            rows.push(ScalingRow {
                classifier,
                axis: axis.to_string(),
                fixed,
                points: pts.len(),
                time: loglog_fit(&xs, &ts),
                memory: loglog_fit(&xs, &ms),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic() {
        let xs = [100.0, 200.0, 400.0, 800.0];
        let ys: Vec<f64> = xs.iter().map(|m| 3.5 * m * m).collect();
        let fit = loglog_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(loglog_fit(&[1.0], &[1.0]).is_none());
        assert!(loglog_fit(&[2.0, 2.0], &[1.0, 3.0]).is_none());
        assert!(loglog_fit(&[1.0, 2.0], &[0.0, 3.0]).is_none());
    }

    #[test]
    fn report_groups_by_fixed_axis() {
        let mut pts = Vec::new();
        for m in [128usize, 256, 512, 1024] {
            for rep in 0..2u64 {
                pts.push(ScalingPoint {
                    classifier: "boss".into(),
                    m,
                    n: 40,
                    fit_time_ns: (m * m) as u64 + rep,
                    peak_memory_bytes: (m * 10) as u64,
                });
            }
        }
        pts.push(ScalingPoint { classifier: "boss".into(), m: 128, n: 80, fit_time_ns: 1, peak_memory_bytes: 1 });
        let rows = scaling_report(&pts);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.axis.as_str(), r.fixed, r.points), ("m", 40, 4));
        assert!((r.time.unwrap().slope - 2.0).abs() < 1e-3);
        assert!((r.memory.unwrap().slope - 1.0).abs() < 1e-9);
    }
}
