use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use clap::ValueEnum;
use corner_benders::oracle::brute_force_optimum;
use corner_benders::vrpsd::VrpsdInstance;

use crate::solve::SUMMARY_HEADER;
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// `100 (z_opt - root_bound) / z_opt`.
    Gap,
    /// Root relaxation time in seconds.
    Time,
    /// Branch-and-bound nodes.
    Nodes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub instance: String,
    pub mode: String,
    pub root_bound: Option<f64>,
    pub root_time_s: f64,
    pub bb_nodes: usize,
    pub opt_value: Option<f64>,
    pub status: String,
}

fn parse_opt(field: &str) -> Result<Option<f64>, String> {
    if field.is_empty() {
        Ok(None)
    } else {
        field.parse().map(Some).map_err(|_| format!("bad number `{field}`"))
    }
}

/// Rows of one summary file; header lines are skipped.
pub fn parse_summary(text: &str) -> Result<Vec<Row>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == SUMMARY_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("line {}: expected 7 fields, got {}", i + 1, f.len()));
        }
        let err = |m: String| format!("line {}: {m}", i + 1);
        rows.push(Row {
            instance: f[0].to_string(),
            mode: f[1].to_string(),
            root_bound: parse_opt(f[2]).map_err(err)?,
            root_time_s: f[3].parse().map_err(|_| err(format!("bad time `{}`", f[3])))?,
            bb_nodes: f[4].parse().map_err(|_| err(format!("bad node count `{}`", f[4])))?,
            opt_value: parse_opt(f[5]).map_err(err)?,
            status: f[6].to_string(),
        });
    }
    Ok(rows)
}

/// `instance,opt_value` lines; a header line is allowed.
fn parse_optima(text: &str) -> Result<HashMap<String, f64>, String> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("instance,") {
            continue;
        }
        let (name, value) = line
            .split_once(',')
            .ok_or_else(|| format!("line {}: expected `instance,opt_value`", i + 1))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad value `{value}`", i + 1))?;
        out.insert(name.trim().to_string(), v);
    }
    Ok(out)
}

/// Known optimum: supplied file, then any optimal summary row, then brute
/// force on the instance file.
fn optimum_of(instance: &str, optima: &HashMap<String, f64>, rows: &[Row], cache: &mut HashMap<String, Option<f64>>) -> Option<f64> {
    if let Some(&v) = optima.get(instance) {
        return Some(v);
    }
    if let Some(v) = rows
        .iter()
        .find(|r| r.instance == instance && r.status == "optimal")
        .and_then(|r| r.opt_value)
    {
        return Some(v);
    }
    *cache.entry(instance.to_string()).or_insert_with(|| {
        let text = std::fs::read_to_string(instance).ok()?;
        let inst = VrpsdInstance::parse(&text).ok()?;
        brute_force_optimum(&inst, true).ok().map(|s| s.value)
    })
}

pub fn gap(z_opt: f64, bound: f64) -> f64 {
    100.0 * (z_opt - bound) / z_opt
}

/// Metric values per mode.
pub fn collect(rows: &[Row], metric: Metric, optima: &HashMap<String, f64>) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut cache = HashMap::new();
    for r in rows {
        let value = match metric {
            Metric::Time => Some(r.root_time_s),
            Metric::Nodes => Some(r.bb_nodes as f64),
            Metric::Gap => match (r.root_bound, optimum_of(&r.instance, optima, rows, &mut cache)) {
                (Some(b), Some(z)) if z != 0.0 => Some(gap(z, b)),
                _ => {
                    log::warn!("no optimum for {}; skipped", r.instance);
                    None
                }
            },
        };
        if let Some(v) = value {
            out.entry(r.mode.clone()).or_default().push(v);
        }
    }
    out
}

/// Steps `(value, fraction of runs with metric <= value)` per mode.
pub fn profile(values: &BTreeMap<String, Vec<f64>>) -> BTreeMap<String, Vec<(f64, f64)>> {
    values
        .iter()
        .map(|(mode, vals)| {
            let mut v = vals.clone();
            v.sort_by(f64::total_cmp);
            let n = v.len() as f64;
            let mut steps: Vec<(f64, f64)> = Vec::new();
            for (i, &x) in v.iter().enumerate() {
                let frac = (i + 1) as f64 / n;
                match steps.last_mut() {
                    Some(last) if last.0 == x => last.1 = frac,
                    _ => steps.push((x, frac)),
                }
            }
            (mode.clone(), steps)
        })
        .collect()
}

fn profile_csv(prof: &BTreeMap<String, Vec<(f64, f64)>>) -> String {
    let mut out = String::from("mode,value,fraction\n");
    for (mode, steps) in prof {
        for (x, f) in steps {
            out.push_str(&format!("{mode},{x:.6},{f:.6}\n"));
        }
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn profile_svg(prof: &BTreeMap<String, Vec<(f64, f64)>>, metric: Metric) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let x_max = prof
        .values()
        .flatten()
        .map(|s| s.0)
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let x_min = prof.values().flatten().map(|s| s.0).fold(0.0f64, f64::min);
    let sx = |x: f64| m + (x - x_min) / (x_max - x_min) * (w - 2.0 * m);
    let sy = |y: f64| h - m - y * (h - 2.0 * m);
    let label = match metric {
        Metric::Gap => "gap (%)",
        Metric::Time => "root time (s)",
        Metric::Nodes => "nodes",
    };
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - m,
        w - m
    ));
    out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label}</text>\n", w / 2.0, h - 12.0));
    out.push_str(&format!("<text x=\"{m}\" y=\"{}\" text-anchor=\"middle\">{x_min:.2}</text>\n", h - m + 16.0));
    out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_max:.2}</text>\n", w - m, h - m + 16.0));
    out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">1</text>\n", m - 6.0, m + 4.0));
    out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">0</text>\n", m - 6.0, h - m + 4.0));
    for (i, (mode, steps)) in prof.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = vec![(sx(x_min), sy(0.0))];
        let mut prev = 0.0;
        for &(x, f) in steps {
            pts.push((sx(x), sy(prev)));
            pts.push((sx(x), sy(f)));
            prev = f;
        }
        pts.push((sx(x_max), sy(prev)));
        let list: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            list.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{mode}</text>\n",
            w - m - 80.0,
            m + 16.0 * (i as f64 + 1.0)
        ));
    }
    out.push_str("</svg>\n");
    out
}

pub fn run(pattern: &str, metric: Metric, optimum: Option<&Path>, svg: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let paths: Vec<_> = glob::glob(pattern)
        .map_err(|e| Failure::usage(format!("bad glob `{pattern}`: {e}")))?
        .filter_map(Result::ok)
        .collect();
    let mut rows = Vec::new();
    for path in &paths {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        rows.extend(parse_summary(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?);
    }
    if rows.is_empty() {
        return Err(Failure::no_data(format!("no summary rows match `{pattern}`")));
    }
    let optima = match optimum {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            parse_optima(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => HashMap::new(),
    };
    let values = collect(&rows, metric, &optima);
    if values.is_empty() {
        return Err(Failure::no_data("no row has a value for this metric"));
    }
    let prof = profile(&values);
    let csv = profile_csv(&prof);
    match out {
        Some(p) => std::fs::write(p, &csv).map_err(|e| Failure::io(p, e))?,
        None => print!("{csv}"),
    }
    if let Some(p) = svg {
        std::fs::write(p, profile_svg(&prof, metric)).map_err(|e| Failure::io(p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_formula() {
        assert!((gap(88.0, 76.0) - 13.636363).abs() < 1e-5);
        assert_eq!(gap(88.0, 88.0), 0.0);
    }

    #[test]
    fn profile_steps() {
        let mut v = BTreeMap::new();
        v.insert("corner".to_string(), vec![0.0, 2.0, 0.0, 1.0]);
        let p = profile(&v);
        assert_eq!(p["corner"], vec![(0.0, 0.5), (1.0, 0.75), (2.0, 1.0)]);
    }

    #[test]
    fn summary_round_trip() {
        let text = format!("{SUMMARY_HEADER}\nex1.vrpsd,parada,76.000000,0.010,0,,root\n");
        let rows = parse_summary(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].root_bound, Some(76.0));
        assert_eq!(rows[0].opt_value, None);
        assert!(parse_summary("a,b,c").is_err());
    }
}
