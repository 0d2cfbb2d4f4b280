//! Aggregate CSV, improvement reports and gnuplot data.
//!
//! `aggregate.csv` has one row per (strategy, fraction) cell in the column
//! order
//!
//! ```text
//! strategy,fraction,runs,seeds,<metric>_mean,<metric>_q25,<metric>_median,<metric>_q75,...
//! ```
//!
//! with metrics in [`METRIC_NAMES`] order, seeds joined by `;` and every
//! float printed with six decimals.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use super::ExperimentError;
use crate::metrics::{AggregateMetrics, Stat, METRIC_NAMES};
use crate::strategies::StrategyId;

const STAT_SUFFIXES: [&str; 4] = ["mean", "q25", "median", "q75"];

pub fn aggregate_header() -> Vec<String> {
    let mut h: Vec<String> = ["strategy", "fraction", "runs", "seeds"].map(String::from).into();
    for m in METRIC_NAMES {
        for s in STAT_SUFFIXES {
            h.push(format!("{m}_{s}"));
        }
    }
    h
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateMetrics], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(aggregate_header())?;
    for a in rows {
        let mut rec = vec![
            a.strategy.clone(),
            f6(a.malleable_fraction),
            a.seeds.len().to_string(),
            a.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
        ];
        for (_, s) in a.stats() {
            rec.extend([s.mean, s.q25, s.median, s.q75].map(f6));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<AggregateMetrics>, ExperimentError> {
    let bad = |m: String| ExperimentError::Config(format!("aggregate CSV: {m}"));
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected = aggregate_header();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad("unexpected header; was it written by this tool?".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, ExperimentError> {
            rec[i].parse().map_err(|_| bad(format!("not a number: {:?}", &rec[i])))
        };
        let seeds = if rec[3].is_empty() {
            Vec::new()
        } else {
            rec[3]
                .split(';')
                .map(|s| s.parse().map_err(|_| bad(format!("bad seed {s:?}"))))
                .collect::<Result<Vec<u64>, _>>()?
        };
        let mut stats = Vec::with_capacity(METRIC_NAMES.len());
        for k in 0..METRIC_NAMES.len() {
            let base = 4 + 4 * k;
            stats.push(Stat {
                mean: num(base)?,
                q25: num(base + 1)?,
                median: num(base + 2)?,
                q75: num(base + 3)?,
            });
        }
        rows.push(AggregateMetrics {
            strategy: rec[0].to_owned(),
            malleable_fraction: num(1)?,
            seeds,
            job_count: stats[0],
            wait: stats[1],
            makespan: stats[2],
            turnaround: stats[3],
            node_utilization: stats[4],
            expands_per_job: stats[5],
            shrinks_per_job: stats[6],
        });
    }
    Ok(rows)
}

/// `100 * (baseline - value) / baseline`; 0 when both are 0.
pub fn improvement_pct(baseline: f64, value: f64) -> f64 {
    if baseline == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        100.0 * (baseline - value) / baseline
    }
}

/// One cell compared against the rigid baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    pub strategy: String,
    pub fraction: f64,
    pub wait_pct: f64,
    pub makespan_pct: f64,
    pub turnaround_pct: f64,
    /// Percentage points.
    pub utilization_delta_pp: f64,
    pub utilization_rel_pct: f64,
    pub expands_per_job: f64,
    pub shrinks_per_job: f64,
}

pub const IMPROVEMENT_COLUMNS: [&str; 9] = [
    "strategy",
    "fraction",
    "wait_pct",
    "makespan_pct",
    "turnaround_pct",
    "utilization_delta_pp",
    "utilization_rel_pct",
    "expands_per_job",
    "shrinks_per_job",
];

/// Compare every cell with the `easy-backfill` cell at fraction 0.
pub fn improvements(rows: &[AggregateMetrics]) -> Result<Vec<Improvement>, ExperimentError> {
    let baseline = rows
        .iter()
        .find(|a| a.strategy == StrategyId::EasyBackfill.name() && a.malleable_fraction == 0.0)
        .ok_or_else(|| {
            ExperimentError::Config("aggregate has no easy-backfill cell at fraction 0 to compare against".into())
        })?;
    Ok(rows
        .iter()
        .map(|a| {
            let bu = baseline.node_utilization.mean;
            let u = a.node_utilization.mean;
            Improvement {
                strategy: a.strategy.clone(),
                fraction: a.malleable_fraction,
                wait_pct: improvement_pct(baseline.wait.mean, a.wait.mean),
                makespan_pct: improvement_pct(baseline.makespan.mean, a.makespan.mean),
                turnaround_pct: improvement_pct(baseline.turnaround.mean, a.turnaround.mean),
                utilization_delta_pp: 100.0 * (u - bu),
                utilization_rel_pct: if bu == 0.0 { f64::NAN } else { 100.0 * (u - bu) / bu },
                expands_per_job: a.expands_per_job.mean,
                shrinks_per_job: a.shrinks_per_job.mean,
            }
        })
        .collect())
}

pub fn write_improvements_csv<W: Write>(rows: &[Improvement], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(IMPROVEMENT_COLUMNS)?;
    for i in rows {
        w.write_record([
            i.strategy.clone(),
            f6(i.fraction),
            f6(i.wait_pct),
            f6(i.makespan_pct),
            f6(i.turnaround_pct),
            f6(i.utilization_delta_pp),
            f6(i.utilization_rel_pct),
            f6(i.expands_per_job),
            f6(i.shrinks_per_job),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable improvement table.
pub fn format_improvements(rows: &[Improvement]) -> String {
    let mut s = format!(
        "{:<14} {:>8} {:>9} {:>9} {:>11} {:>9} {:>8} {:>8}\n",
        "strategy", "fraction", "wait %", "makespan %", "turnaround %", "util pp", "exp/job", "shr/job"
    );
    for i in rows {
        s.push_str(&format!(
            "{:<14} {:>8.2} {:>9.2} {:>10.2} {:>12.2} {:>9.2} {:>8.3} {:>8.3}\n",
            i.strategy,
            i.fraction,
            i.wait_pct,
            i.makespan_pct,
            i.turnaround_pct,
            i.utilization_delta_pp,
            i.expands_per_job,
            i.shrinks_per_job
        ));
    }
    s
}

/// Strategies in first-seen order and the cells keyed by (strategy, fraction).
fn by_fraction<'a, T>(
    rows: &'a [T],
    key: impl Fn(&T) -> (&str, f64),
) -> (Vec<String>, BTreeMap<u64, BTreeMap<String, &'a T>>) {
    let mut strategies: Vec<String> = Vec::new();
    let mut cells: BTreeMap<u64, BTreeMap<String, &T>> = BTreeMap::new();
    for r in rows {
        let (s, f) = key(r);
        if !strategies.iter().any(|x| x == s) {
            strategies.push(s.to_owned());
        }
        // Non-negative floats order like their bit patterns.
        cells.entry(f.to_bits()).or_default().insert(s.to_owned(), r);
    }
    (strategies, cells)
}

/// Bar-chart data for one metric: a row per fraction with mean, q25 and q75
/// columns per strategy (`-` where a cell is missing).
pub fn metric_plot_data(rows: &[AggregateMetrics], metric: &str) -> String {
    let (strategies, cells) = by_fraction(rows, |a| (a.strategy.as_str(), a.malleable_fraction));
    let mut s = String::from("# fraction");
    for st in &strategies {
        s.push_str(&format!(" {st}_mean {st}_q25 {st}_q75"));
    }
    s.push('\n');
    for (bits, row) in &cells {
        s.push_str(&format!("{:.2}", f64::from_bits(*bits)));
        for st in &strategies {
            match row.get(st).and_then(|a| a.metric(metric)) {
                Some(v) => s.push_str(&format!(" {:.6} {:.6} {:.6}", v.mean, v.q25, v.q75)),
                None => s.push_str(" - - -"),
            }
        }
        s.push('\n');
    }
    s
}

/// Gnuplot script drawing `<metric>.dat` as clustered bars with IQR error bars.
pub fn metric_gnuplot(metric: &str, strategies: &[String]) -> String {
    let mut s = format!(
        "# Render with: gnuplot {metric}.gp\n\
         set terminal pngcairo size 900,600\n\
         set output '{metric}.png'\n\
         set style data histogram\n\
         set style histogram errorbars gap 2 lw 1\n\
         set style fill solid 0.8 border -1\n\
         set key top left\n\
         set xlabel 'malleable fraction'\n\
         set ylabel '{metric}'\n\
         plot "
    );
    let parts: Vec<String> = strategies
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let c = 2 + 3 * i;
            let xt = if i == 0 { ":xtic(1)" } else { "" };
            format!("'{metric}.dat' using {c}:{}:{}{xt} title '{st}'", c + 1, c + 2)
        })
        .collect();
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}

/// Improvement of every strategy per fraction for one column of [`Improvement`].
pub fn improvement_plot_data(rows: &[Improvement], column: &str) -> String {
    let (strategies, cells) = by_fraction(rows, |i| (i.strategy.as_str(), i.fraction));
    let pick = |i: &Improvement| match column {
        "wait_pct" => i.wait_pct,
        "makespan_pct" => i.makespan_pct,
        "turnaround_pct" => i.turnaround_pct,
        "utilization_delta_pp" => i.utilization_delta_pp,
        _ => f64::NAN,
    };
    let mut s = format!("# fraction {}\n", strategies.join(" "));
    for (bits, row) in &cells {
        s.push_str(&format!("{:.2}", f64::from_bits(*bits)));
        for st in &strategies {
            match row.get(st) {
                Some(i) => s.push_str(&format!(" {:.6}", pick(i))),
                None => s.push_str(" -"),
            }
        }
        s.push('\n');
    }
    s
}

pub fn improvement_gnuplot(column: &str, strategies: &[String]) -> String {
    let mut s = format!(
        "# Render with: gnuplot improvement_{column}.gp\n\
         set terminal pngcairo size 900,600\n\
         set output 'improvement_{column}.png'\n\
         set style data histogram\n\
         set style histogram clustered gap 2\n\
         set style fill solid 0.8 border -1\n\
         set key top left\n\
         set xlabel 'malleable fraction'\n\
         set ylabel '{column}'\n\
         plot "
    );
    let parts: Vec<String> = strategies
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let xt = if i == 0 { ":xtic(1)" } else { "" };
            format!("'improvement_{column}.dat' using {}{xt} title '{st}'", i + 2)
        })
        .collect();
    s.push_str(&parts.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(strategy: &str, fraction: f64, wait: f64, util: f64) -> AggregateMetrics {
        let st = |v: f64| Stat {
            mean: v,
            q25: v,
            median: v,
            q75: v,
        };
        AggregateMetrics {
            strategy: strategy.into(),
            malleable_fraction: fraction,
            seeds: vec![0, 1],
            job_count: st(10.0),
            wait: st(wait),
            makespan: st(100.0),
            turnaround: st(100.0 + wait),
            node_utilization: st(util),
            expands_per_job: st(0.0),
            shrinks_per_job: st(0.0),
        }
    }

    #[test]
    fn published_improvements() {
        // Two decimals, as published; the exact quotients are 66.876... and 62.733...
        assert!((improvement_pct(2391.0, 792.0) - 66.87).abs() <= 0.01);
        assert!((improvement_pct(4551.0, 1696.0) - 62.74).abs() <= 0.01);
        assert_eq!(improvement_pct(500.0, 500.0), 0.0);
        assert_eq!(improvement_pct(0.0, 0.0), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![cell("easy-backfill", 0.0, 50.0, 0.7), cell("min", 0.2, 25.0, 0.8)];
        let mut buf = Vec::new();
        write_aggregate_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("strategy,fraction,runs,seeds,job_count_mean,"));
        assert!(text.contains("min,0.200000,2,0;1,"));
        assert_eq!(read_aggregate_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn improvements_need_baseline() {
        let rows = vec![cell("easy-backfill", 0.0, 50.0, 0.7), cell("min", 0.2, 25.0, 0.8)];
        let imp = improvements(&rows).unwrap();
        assert_eq!(imp[1].wait_pct, 50.0);
        assert!((imp[1].utilization_delta_pp - 10.0).abs() < 1e-9);
        assert!(improvements(&rows[1..]).is_err());
    }

    #[test]
    fn plot_layout() {
        let rows = vec![
            cell("easy-backfill", 0.0, 50.0, 0.7),
            cell("min", 0.0, 50.0, 0.7),
            cell("min", 0.2, 25.0, 0.8),
        ];
        let dat = metric_plot_data(&rows, "wait");
        let lines: Vec<&str> = dat.lines().collect();
        assert_eq!(lines[0], "# fraction easy-backfill_mean easy-backfill_q25 easy-backfill_q75 min_mean min_q25 min_q75");
        assert_eq!(lines[2], "0.20 - - - 25.000000 25.000000 25.000000");
        let gp = metric_gnuplot("wait", &["easy-backfill".into(), "min".into()]);
        assert!(gp.contains("using 5:6:7 title 'min'"));
    }
}
