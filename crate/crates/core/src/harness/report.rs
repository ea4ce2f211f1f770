//! Reports over sweep rows: aggregated CSV tables and self-contained SVG
//! charts, generated deterministically with no plotting dependency.

use super::{median, ResultRow};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// The analysis surfaces that can be rendered from rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    /// Error vs budget (log scale), one line per variant.
    BudgetCurves,
    /// Error vs test age, one bar group per variant.
    AgeConfig,
    /// Train-age x test-age error heatmap.
    AgeMatrix,
    /// Age-dependent vs age-independent curves.
    AgeIndep,
    /// Across-variant error variance per age.
    Variance,
    /// Age-dependent minus matched age-independent, per variant.
    Diff,
}

pub const REPORT_KINDS: [&str; 6] = [
    "budget-curves",
    "age-config",
    "age-matrix",
    "age-indep",
    "variance",
    "diff",
];

impl FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportKind> {
        match s {
            "budget-curves" => Ok(ReportKind::BudgetCurves),
            "age-config" => Ok(ReportKind::AgeConfig),
            "age-matrix" => Ok(ReportKind::AgeMatrix),
            "age-indep" => Ok(ReportKind::AgeIndep),
            "variance" => Ok(ReportKind::Variance),
            "diff" => Ok(ReportKind::Diff),
            other => Err(Error::config(format!(
                "unknown report kind `{other}`; valid kinds: {}",
                REPORT_KINDS.join(", ")
            ))),
        }
    }
}

impl ReportKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReportKind::BudgetCurves => "budget-curves",
            ReportKind::AgeConfig => "age-config",
            ReportKind::AgeMatrix => "age-matrix",
            ReportKind::AgeIndep => "age-indep",
            ReportKind::Variance => "variance",
            ReportKind::Diff => "diff",
        }
    }
}

fn variant_key(row: &ResultRow) -> String {
    if row.schedule == "-" {
        row.variant.clone()
    } else {
        format!("{}@{}", row.variant, row.schedule)
    }
}

/// Median frame error per (variant, budget) over seeds.
fn budget_medians(rows: &[ResultRow]) -> BTreeMap<(String, usize), f64> {
    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((variant_key(row), row.budget_frames))
            .or_default()
            .push(row.frame_error);
    }
    groups
        .into_iter()
        .map(|(k, mut v)| (k, median(&mut v)))
        .collect()
}

/// Smallest budget at which `sym:2` is no longer strictly best among the
/// transfer variants, scanning budgets in increasing order. None when it
/// stays strictly best throughout, or when no sym:2 rows exist.
pub fn crossover_budget(rows: &[ResultRow]) -> Option<usize> {
    let medians = budget_medians(rows);
    let mut budgets: Vec<usize> = medians
        .keys()
        .filter(|(v, _)| v.starts_with("sym:2"))
        .map(|(_, b)| *b)
        .collect();
    budgets.sort_unstable();
    budgets.dedup();
    if budgets.is_empty() {
        return None;
    }
    for budget in budgets {
        let sym2 = medians
            .iter()
            .find(|((v, b), _)| v.starts_with("sym:2") && *b == budget)
            .map(|(_, e)| *e)?;
        let best_other = medians
            .iter()
            .filter(|((v, b), _)| !v.starts_with("sym:2") && *b == budget)
            .map(|(_, e)| *e)
            .fold(f64::INFINITY, f64::min);
        if best_other.is_finite() && best_other <= sym2 {
            return Some(budget);
        }
    }
    None
}

/// Per-age median error per variant from per-age rows.
fn age_medians(rows: &[ResultRow]) -> BTreeMap<(String, String), f64> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in rows {
        if row.test_age == "all" {
            continue;
        }
        groups
            .entry((variant_key(row), row.test_age.clone()))
            .or_default()
            .push(row.frame_error);
    }
    groups
        .into_iter()
        .map(|(k, mut v)| (k, median(&mut v)))
        .collect()
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// A fixed-canvas line chart. Deterministic element order.
fn svg_line_chart(title: &str, x_label: &str, series: &[Series], log_x: bool) -> String {
    let (w, h) = (800.0, 500.0);
    let (ml, mr, mt, mb) = (70.0, 160.0, 40.0, 60.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let xs = |x: f64| if log_x { x.max(1.0).log10() } else { x };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min: f64 = 0.0;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(xs(x));
            x_max = x_max.max(xs(x));
            y_max = y_max.max(y);
            y_min = y_min.min(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_max.is_finite() {
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_max = x_min + 1.0;
    }
    y_max *= 1.08;
    if y_min < 0.0 {
        y_min *= 1.08;
    }

    let px = |x: f64| ml + (xs(x) - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| mt + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>",
        ml + plot_w / 2.0
    )
    .unwrap();
    // Axes.
    writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    )
    .unwrap();
    writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.1}\" stroke=\"black\"/>",
        mt + plot_h
    )
    .unwrap();
    // Y ticks.
    for i in 0..=5 {
        let y = y_min + (y_max - y_min) * i as f64 / 5.0;
        let yy = py(y);
        writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{yy:.1}\" x2=\"{ml}\" y2=\"{yy:.1}\" stroke=\"black\"/>",
            ml - 4.0
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{y:.3}</text>",
            ml - 8.0,
            yy + 4.0
        )
        .unwrap();
    }
    // X ticks from the union of series x positions.
    let mut ticks: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for &x in &ticks {
        let xx = px(x);
        writeln!(
            svg,
            "<line x1=\"{xx:.1}\" y1=\"{:.1}\" x2=\"{xx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            mt + plot_h,
            mt + plot_h + 4.0
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{xx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x}</text>",
            mt + plot_h + 18.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>",
        ml + plot_w / 2.0,
        h - 16.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">frame error</text>",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    )
    .unwrap();
    // Series.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in &s.points {
            if path.is_empty() {
                write!(path, "M {:.2} {:.2}", px(x), py(y)).unwrap();
            } else {
                write!(path, " L {:.2} {:.2}", px(x), py(y)).unwrap();
            }
        }
        writeln!(
            svg,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>"
        )
        .unwrap();
        for &(x, y) in &s.points {
            writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                px(x),
                py(y)
            )
            .unwrap();
        }
        let ly = mt + 16.0 * i as f64;
        writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"{ly:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>",
            ml + plot_w + 12.0
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            ml + plot_w + 28.0,
            ly + 10.0,
            s.name
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

/// A 9x9 heatmap over child ages.
fn svg_heatmap(title: &str, ages: &[String], matrix: &BTreeMap<(String, String), f64>) -> String {
    let n = ages.len();
    let cell = 44.0;
    let (ml, mt) = (90.0, 70.0);
    let w = ml + cell * n as f64 + 130.0;
    let h = mt + cell * n as f64 + 40.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in matrix.values() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo).abs() < 1e-12 {
        hi = lo + 1.0;
    }
    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>",
        ml + cell * n as f64 / 2.0
    )
    .unwrap();
    for (r, train_age) in ages.iter().enumerate() {
        writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">train {train_age}</text>",
            ml - 8.0,
            mt + cell * r as f64 + cell / 2.0 + 4.0
        )
        .unwrap();
        for (c, test_age) in ages.iter().enumerate() {
            let value = matrix
                .get(&(train_age.clone(), test_age.clone()))
                .copied()
                .unwrap_or(f64::NAN);
            let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
            let red = (255.0 * t).round() as u8;
            let blue = (255.0 * (1.0 - t)).round() as u8;
            let x = ml + cell * c as f64;
            let y = mt + cell * r as f64;
            writeln!(
                svg,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"rgb({red},90,{blue})\" stroke=\"white\"/>"
            )
            .unwrap();
            writeln!(
                svg,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"white\">{value:.3}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            )
            .unwrap();
        }
    }
    for (c, test_age) in ages.iter().enumerate() {
        writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">test {test_age}</text>",
            ml + cell * c as f64 + cell / 2.0,
            mt - 10.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn child_age_labels() -> Vec<String> {
    (6..=14).map(|a| a.to_string()).collect()
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Render one report kind from rows. Output files share the `out_prefix`
/// stem; returns the written paths.
pub fn render_report(rows: &[ResultRow], kind: ReportKind, out_prefix: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::config("no rows to report on".to_string()));
    }
    let stem = out_prefix.to_string_lossy().to_string();
    let csv_path = PathBuf::from(format!("{stem}_{}.csv", kind.as_str()));
    let svg_path = PathBuf::from(format!("{stem}_{}.svg", kind.as_str()));
    let mut written = Vec::new();

    match kind {
        ReportKind::BudgetCurves => {
            let medians = budget_medians(rows);
            let mut csv = String::from("variant,budget_frames,median_frame_error\n");
            let mut by_variant: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for ((variant, budget), err) in &medians {
                writeln!(csv, "{variant},{budget},{err}").unwrap();
                by_variant
                    .entry(variant.clone())
                    .or_default()
                    .push((*budget as f64, *err));
            }
            let series: Vec<Series> = by_variant
                .into_iter()
                .map(|(name, mut points)| {
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { name, points }
                })
                .collect();
            write_file(&csv_path, &csv)?;
            write_file(
                &svg_path,
                &svg_line_chart("frame error vs adaptation budget", "budget (frames, log)", &series, true),
            )?;
            written.push(csv_path);
            written.push(svg_path);
            let cross_path = PathBuf::from(format!("{stem}_{}_crossover.csv", kind.as_str()));
            let mut cross = String::from("crossover_budget_frames\n");
            if let Some(b) = crossover_budget(rows) {
                writeln!(cross, "{b}").unwrap();
            }
            write_file(&cross_path, &cross)?;
            written.push(cross_path);
        }
        ReportKind::AgeConfig => {
            let medians = age_medians(rows);
            let mut csv = String::from("variant,test_age,median_frame_error\n");
            let mut by_variant: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for ((variant, age), err) in &medians {
                writeln!(csv, "{variant},{age},{err}").unwrap();
                if let Ok(age_num) = age.parse::<f64>() {
                    by_variant
                        .entry(variant.clone())
                        .or_default()
                        .push((age_num, *err));
                }
            }
            let series: Vec<Series> = by_variant
                .into_iter()
                .map(|(name, mut points)| {
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { name, points }
                })
                .collect();
            write_file(&csv_path, &csv)?;
            write_file(
                &svg_path,
                &svg_line_chart("frame error vs child age", "test age (years)", &series, false),
            )?;
            written.push(csv_path);
            written.push(svg_path);
        }
        ReportKind::AgeMatrix => {
            let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
            for row in rows {
                if row.test_age == "all" || row.train_age_set == "all" {
                    continue;
                }
                groups
                    .entry((row.train_age_set.clone(), row.test_age.clone()))
                    .or_default()
                    .push(row.frame_error);
            }
            let matrix: BTreeMap<(String, String), f64> = groups
                .into_iter()
                .map(|(k, mut v)| (k, median(&mut v)))
                .collect();
            let ages = child_age_labels();
            let mut csv = String::from("train_age");
            for a in &ages {
                write!(csv, ",test_{a}").unwrap();
            }
            csv.push('\n');
            for train in &ages {
                write!(csv, "{train}").unwrap();
                for test in &ages {
                    match matrix.get(&(train.clone(), test.clone())) {
                        Some(v) => write!(csv, ",{v}").unwrap(),
                        None => write!(csv, ",").unwrap(),
                    }
                }
                csv.push('\n');
            }
            write_file(&csv_path, &csv)?;
            write_file(
                &svg_path,
                &svg_heatmap("age-dependent transform portability", &ages, &matrix),
            )?;
            written.push(csv_path);
            written.push(svg_path);
        }
        ReportKind::AgeIndep => {
            // Families live in train_age_set: "all", "avg-indep",
            // "matched-indep", or the matched age itself.
            let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
            for row in rows {
                if row.test_age == "all" {
                    continue;
                }
                let family = match row.train_age_set.as_str() {
                    "all" => "indep-full",
                    "avg-indep" => "indep-avg",
                    "matched-indep" => "indep-matched",
                    _ => "dep-matched",
                };
                groups
                    .entry((family.to_string(), row.test_age.clone()))
                    .or_default()
                    .push(row.frame_error);
            }
            let mut csv = String::from("family,test_age,median_frame_error\n");
            let mut by_family: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for ((family, age), mut errs) in groups {
                let m = median(&mut errs);
                writeln!(csv, "{family},{age},{m}").unwrap();
                if let Ok(age_num) = age.parse::<f64>() {
                    by_family.entry(family).or_default().push((age_num, m));
                }
            }
            let series: Vec<Series> = by_family
                .into_iter()
                .map(|(name, mut points)| {
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { name, points }
                })
                .collect();
            write_file(&csv_path, &csv)?;
            write_file(
                &svg_path,
                &svg_line_chart(
                    "age-dependent vs age-independent adaptation",
                    "test age (years)",
                    &series,
                    false,
                ),
            )?;
            written.push(csv_path);
            written.push(svg_path);
        }
        ReportKind::Variance => {
            let medians = age_medians(rows);
            let mut by_age: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for ((_, age), err) in &medians {
                by_age.entry(age.clone()).or_default().push(*err);
            }
            let mut csv = String::from("test_age,error_variance\n");
            let mut points = Vec::new();
            for (age, errs) in &by_age {
                let n = errs.len() as f64;
                let mean = errs.iter().sum::<f64>() / n;
                let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
                writeln!(csv, "{age},{var}").unwrap();
                if let Ok(age_num) = age.parse::<f64>() {
                    points.push((age_num, var));
                }
            }
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let series = [Series {
                name: "variance".to_string(),
                points,
            }];
            write_file(&csv_path, &csv)?;
            write_file(
                &svg_path,
                &svg_line_chart(
                    "error variance across configurations",
                    "test age (years)",
                    &series,
                    false,
                ),
            )?;
            written.push(csv_path);
            written.push(svg_path);
        }
        ReportKind::Diff => {
            // Age-dependent minus matched age-independent, per variant.
            let mut dep: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
            let mut indep: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
            for row in rows {
                if row.test_age == "all" {
                    continue;
                }
                let key = (variant_key(row), row.test_age.clone());
                match row.train_age_set.as_str() {
                    "matched-indep" => indep.entry(key).or_default().push(row.frame_error),
                    "all" | "avg-indep" => {}
                    _ => dep.entry(key).or_default().push(row.frame_error),
                }
            }
            let mut csv = String::from("variant,test_age,dep_minus_matched_indep\n");
            let mut by_variant: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for ((variant, age), mut dep_errs) in dep {
                let Some(indep_errs) = indep.get_mut(&(variant.clone(), age.clone())) else {
                    continue;
                };
                let diff = median(&mut dep_errs) - median(indep_errs);
                writeln!(csv, "{variant},{age},{diff}").unwrap();
                if let Ok(age_num) = age.parse::<f64>() {
                    by_variant
                        .entry(variant)
                        .or_default()
                        .push((age_num, diff));
                }
            }
            let series: Vec<Series> = by_variant
                .into_iter()
                .map(|(name, mut points)| {
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { name, points }
                })
                .collect();
            write_file(&csv_path, &csv)?;
            write_file(
                &svg_path,
                &svg_line_chart(
                    "age-dependent minus matched age-independent",
                    "test age (years)",
                    &series,
                    false,
                ),
            )?;
            written.push(csv_path);
            written.push(svg_path);
        }
    }
    Ok(written)
}
