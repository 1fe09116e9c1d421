//! SVG 1.1 plot of an explanation: the original series as one polyline, the
//! recommended counterfactual segment over the replaced interval as a
//! second, contrasting polyline, plus the two axes. Text emission only, so
//! plots are diffable in tests.

use timecf::cfgen::ExplanationReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;

fn scale(
    values: impl Iterator<Item = (usize, f64)>,
    n: usize,
    lo: f64,
    hi: f64,
) -> String {
    let span = (hi - lo).max(1e-9);
    values
        .map(|(i, v)| {
            let x = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1).max(1) as f64;
            let y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / span;
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders the report. The recommended counterfactual must be present.
pub fn explanation_svg(report: &ExplanationReport, config_echo: &str) -> Option<String> {
    let recommended = report.recommended.as_ref()?;
    let original = report.original.values();
    let n = original.len();
    let iv = recommended.interval;
    let segment: Vec<(usize, f64)> = (iv.start..iv.start + iv.length)
        .map(|i| (i, recommended.counterfactual.values()[i]))
        .collect();

    let lo = original
        .iter()
        .copied()
        .chain(segment.iter().map(|(_, v)| *v))
        .fold(f64::INFINITY, f64::min);
    let hi = original
        .iter()
        .copied()
        .chain(segment.iter().map(|(_, v)| *v))
        .fold(f64::NEG_INFINITY, f64::max);

    let original_points = scale(original.iter().copied().enumerate(), n, lo, hi);
    let segment_points = scale(segment.into_iter(), n, lo, hi);

    let x0 = MARGIN;
    let x1 = WIDTH - MARGIN;
    let y0 = HEIGHT - MARGIN;
    let y1 = MARGIN;
    let label = report
        .original
        .id()
        .map(str::to_owned)
        .unwrap_or_else(|| "instance".into());

    Some(format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
  <desc>{}</desc>
  <line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>
  <line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>
  <text x="{x0}" y="{ty}" font-size="12" font-family="sans-serif">{label}: label {} -&gt; {} (interval {}..{}, hamming {})</text>
  <polyline points="{original_points}" fill="none" stroke="steelblue" stroke-width="1.5"/>
  <polyline points="{segment_points}" fill="none" stroke="orangered" stroke-width="2.5"/>
</svg>
"#,
        xml_escape(config_echo),
        recommended.original_label,
        recommended.predicted_label,
        iv.start,
        iv.start + iv.length,
        recommended.hamming,
        ty = MARGIN - 16.0,
    ))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use timecf::cfgen::{CounterfactualResult, Method};
    use timecf::series::{ClassLabel, Interval, TimeSeries};

    fn report_with_recommendation() -> ExplanationReport {
        let original = TimeSeries::with_id(vec![0.0, 1.0, 2.0, 1.0, 0.0], Some("t0".into())).unwrap();
        let counterfactual = TimeSeries::new(vec![0.0, 5.0, 6.0, 1.0, 0.0]).unwrap();
        let result = CounterfactualResult {
            original_id: Some("t0".into()),
            original_label: ClassLabel(0),
            counterfactual,
            predicted_label: ClassLabel(1),
            interval: Interval { start: 1, length: 2 },
            shapelet_ref: Some(0),
            fake_index: 3,
            hamming: 2,
            l1: 8.0,
            method: Method::TimeCf,
        };
        ExplanationReport {
            original,
            original_label: ClassLabel(0),
            results: vec![result.clone()],
            recommended: Some(result),
            candidate_outcomes: vec![],
            n_fakes: 10,
            config: timecf::cfgen::ExplainConfig::default(),
            runtime: Default::default(),
        }
    }

    #[test]
    fn svg_has_exactly_two_polylines_and_axes() {
        let report = report_with_recommendation();
        let svg = explanation_svg(&report, "{\"seed\":7}").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(svg.contains("<desc>"));
        assert!(svg.contains("version=\"1.1\""));
    }

    #[test]
    fn no_recommendation_means_no_plot() {
        let mut report = report_with_recommendation();
        report.recommended = None;
        assert!(explanation_svg(&report, "{}").is_none());
    }
}
