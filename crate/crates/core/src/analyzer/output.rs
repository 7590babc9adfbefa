//! Report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    io_err, Analysis, AnalyzerError, BandClass, CategoryTable, CensorshipReport, RatioSeries,
    TemporalSignal,
};
use crate::corpus::Category;
use crate::engine::EngineId;

pub const ANALYSIS_FILE: &str = "analysis.json";
pub const REPORT_FILE: &str = "report.md";

/// Rows shown per table in the markdown report; CSVs carry everything.
const REPORT_ROWS: usize = 50;

fn slug(id: &EngineId) -> String {
    id.as_str()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn ratio_2(x: f64) -> String {
    if x != 0.0 && x.abs() < 0.01 {
        format!("{x:.2e}")
    } else {
        format!("{x:.2}")
    }
}

fn signal_char(s: TemporalSignal) -> char {
    match s {
        TemporalSignal::BannerPresent | TemporalSignal::ResetTriggered => 'X',
        TemporalSignal::BannerAbsent | TemporalSignal::ResetAbsent => '.',
        TemporalSignal::NoData => '-',
    }
}

fn signal_name(s: TemporalSignal) -> &'static str {
    match s {
        TemporalSignal::BannerPresent => "banner-present",
        TemporalSignal::BannerAbsent => "banner-absent",
        TemporalSignal::ResetTriggered => "reset-triggered",
        TemporalSignal::ResetAbsent => "reset-absent",
        TemporalSignal::NoData => "no-data",
    }
}

struct Out {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    fn csv<const N: usize>(
        &mut self,
        name: &str,
        header: [&str; N],
        rows: impl IntoIterator<Item = [String; N]>,
    ) -> Result<(), AnalyzerError> {
        let path = self.dir.join(name);
        let csv_err = |e: csv::Error| AnalyzerError::Io {
            path: path.display().to_string(),
            source: e.into(),
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), AnalyzerError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }
}

fn plot_rows(
    order: &[(usize, &str)],
    series: &[RatioSeries],
    run_ids: &[String],
) -> Vec<[String; 3]> {
    let by_word: BTreeMap<&str, &RatioSeries> =
        series.iter().map(|s| (s.word.as_str(), s)).collect();
    let mut rows = Vec::new();
    for (rank, word) in order {
        let Some(s) = by_word.get(word) else { continue };
        for (p, run) in s.points.iter().zip(run_ids) {
            if let Some(r) = p.plottable() {
                rows.push([rank.to_string(), run.clone(), r.to_string()]);
            }
        }
    }
    rows
}

/// Writes the selected report files into `dir`, creating it if needed, and
/// returns their paths.
pub fn write_outputs(report: &CensorshipReport, dir: &Path) -> Result<Vec<PathBuf>, AnalyzerError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut out = Out {
        dir: dir.to_path_buf(),
        written: Vec::new(),
    };
    let sel = &report.selection;
    let run_ids: Vec<String> = report.runs.iter().map(|r| r.run_id.clone()).collect();

    if sel.has(Analysis::Ratios) {
        for r in &report.ratios {
            let tag = format!("{}_vs_{}", slug(&r.numerator), slug(&r.denominator));
            out.csv(
                &format!("ratios_{tag}.csv"),
                ["rank", "word", "median_ratio", "band", "category"],
                r.rows.iter().map(|x| {
                    [
                        x.rank.to_string(),
                        x.word.clone(),
                        x.median_ratio.to_string(),
                        x.band.label().into(),
                        x.category.label().into(),
                    ]
                }),
            )?;
            let order: Vec<(usize, &str)> =
                r.rows.iter().map(|x| (x.rank, x.word.as_str())).collect();
            out.csv(
                &format!("plot_ratios_{tag}.csv"),
                ["rank", "run_id", "ratio"],
                plot_rows(&order, &r.series, &run_ids),
            )?;
        }
    }
    if sel.has(Analysis::Quotes) {
        for q in &report.quotation {
            let tag = slug(&q.engine);
            out.csv(
                &format!("quotes_{tag}.csv"),
                [
                    "rank",
                    "word",
                    "median_ratio",
                    "below_threshold",
                    "category",
                ],
                q.rows.iter().map(|x| {
                    [
                        x.rank.to_string(),
                        x.word.clone(),
                        x.median_ratio.to_string(),
                        x.below_threshold.to_string(),
                        x.category.label().into(),
                    ]
                }),
            )?;
            let order: Vec<(usize, &str)> =
                q.rows.iter().map(|x| (x.rank, x.word.as_str())).collect();
            out.csv(
                &format!("plot_quotes_{tag}.csv"),
                ["rank", "run_id", "ratio"],
                plot_rows(&order, &q.series, &run_ids),
            )?;
        }
    }
    if sel.has(Analysis::Banners) {
        for b in &report.banners {
            out.csv(
                &format!("banners_{}.csv", slug(&b.engine)),
                ["word", "trigger", "total", "ratio"],
                b.rows.iter().filter(|r| r.stats.at_least_once).map(|r| {
                    [
                        r.stats.word.clone(),
                        r.stats.trigger_count.to_string(),
                        r.stats.observation_count.to_string(),
                        format!("{:.2}", r.ratio),
                    ]
                }),
            )?;
        }
    }
    if sel.has(Analysis::Resets) {
        for r in &report.resets {
            out.csv(
                &format!("resets_{}.csv", slug(&r.engine)),
                ["word", "resets", "total", "trace"],
                r.series.iter().map(|s| {
                    [
                        s.word.clone(),
                        s.reset_count.to_string(),
                        s.observation_count.to_string(),
                        s.trace.iter().copied().map(signal_char).collect(),
                    ]
                }),
            )?;
        }
    }
    if sel.has(Analysis::Banners) || sel.has(Analysis::Resets) {
        out.csv(
            "temporal.csv",
            ["engine", "word", "run_id", "offset_s", "signal"],
            report.temporal.iter().map(|p| {
                [
                    p.engine.to_string(),
                    p.word.clone(),
                    p.run_id.clone(),
                    p.offset_s.to_string(),
                    signal_name(p.signal).into(),
                ]
            }),
        )?;
    }
    if sel.has(Analysis::Whitelist) {
        out.csv(
            "whitelist.csv",
            [
                "engine",
                "word",
                "unique_domains",
                "entries",
                "partial",
                "domains",
            ],
            report.whitelists.iter().map(|f| {
                let domains = f
                    .inference
                    .domains
                    .iter()
                    .flatten()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(" ");
                [
                    f.engine.to_string(),
                    f.word.clone(),
                    f.inference.unique_domains.to_string(),
                    f.inference.entries_considered.to_string(),
                    f.inference.partial.to_string(),
                    domains,
                ]
            }),
        )?;
    }
    if sel.has(Analysis::Blacklist) {
        out.csv(
            "blacklist.csv",
            ["probe", "reference", "engine", "missing_domains"],
            report.blacklist.iter().map(|f| {
                [
                    f.probe.clone(),
                    f.reference.to_string(),
                    f.engine.to_string(),
                    f.missing_domains
                        .iter()
                        .cloned()
                        .collect::<Vec<_>>()
                        .join(" "),
                ]
            }),
        )?;
    }
    if let Some(table) = &report.categories {
        out.text("table2.md", &category_markdown(table))?;
    }
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    out.text(ANALYSIS_FILE, &(json + "\n"))?;
    if sel.has(Analysis::Report) {
        out.text(REPORT_FILE, &render_report(report))?;
    }
    Ok(out.written)
}

/// Reads `analysis.json` from `dir` and writes `report.md` beside it.
pub fn write_report(dir: &Path) -> Result<PathBuf, AnalyzerError> {
    let path = dir.join(ANALYSIS_FILE);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let report: CensorshipReport = serde_json::from_str(&text)
        .map_err(|e| AnalyzerError::Config(format!("{}: {e}", path.display())))?;
    let out = dir.join(REPORT_FILE);
    std::fs::write(&out, render_report(&report)).map_err(io_err(&out))?;
    Ok(out)
}

fn category_markdown(table: &CategoryTable) -> String {
    let mut s = String::new();
    let _ = write!(s, "| Category |");
    for c in &table.columns {
        let _ = write!(s, " {} |", c.id);
    }
    s.push_str("\n|---|");
    s.push_str(&"---:|".repeat(table.columns.len()));
    s.push('\n');
    for cat in Category::ROWS {
        let _ = write!(s, "| {} |", cat.label());
        for c in &table.columns {
            let _ = write!(s, " {} |", c.counts.get(&cat).copied().unwrap_or(0));
        }
        s.push('\n');
    }
    s.push_str("| Total |");
    for c in &table.columns {
        let _ = write!(s, " {} |", c.total);
    }
    s.push_str("\n| Percent |");
    for c in &table.columns {
        let _ = write!(s, " {}% |", c.percent);
    }
    s.push_str("\n\n");
    for c in &table.columns {
        let _ = writeln!(
            s,
            "- {}: `{}`, words {}-{}",
            c.id, c.source, c.first, c.last
        );
    }
    s
}

/// Renders the consolidated markdown report. Pure function of `report`.
pub fn render_report(report: &CensorshipReport) -> String {
    let mut s = String::from("# Censorship measurement report\n\n");
    let variant = if report.primary_quoted {
        "quoted"
    } else {
        "unquoted"
    };
    let _ = writeln!(
        s,
        "{} runs; primary series use {variant} queries.\n",
        report.runs.len()
    );

    s.push_str("## Runs\n\n| run | offset (s) | duration (s) | parsed | gave up | skipped | failed attempts | unavailable |\n|---|---:|---:|---:|---:|---:|---:|---|\n");
    for r in &report.runs {
        let unavailable: Vec<&str> = r.unavailable_engines.iter().map(EngineId::as_str).collect();
        let _ = writeln!(
            s,
            "| {} | {:.1} | {:.1} | {} | {} | {} | {} | {} |",
            r.run_id,
            r.offset_s,
            r.duration_s,
            r.counts.parsed,
            r.counts.gave_up,
            r.counts.skipped,
            r.counts.failed_attempts,
            unavailable.join(", ")
        );
    }

    s.push_str("\n## Hit ratios\n\n");
    if report.ratios.is_empty() {
        s.push_str("No ratio pairs analysed.\n");
    }
    for r in &report.ratios {
        let count = |b: BandClass| r.rows.iter().filter(|x| x.band == b).count();
        let _ = writeln!(s, "### {} / {}\n", r.numerator, r.denominator);
        let _ = writeln!(
            s,
            "{} ranked words: {} low tail, {} unremarkable, {} high tail; {} without a median. Tail boundary at rank {}.\n",
            r.rows.len(),
            count(BandClass::LowTail),
            count(BandClass::Unremarkable),
            count(BandClass::HighTail),
            r.without_median.len(),
            r.tail_boundary
        );
        let low: Vec<_> = r
            .rows
            .iter()
            .filter(|x| x.band == BandClass::LowTail)
            .collect();
        if !low.is_empty() {
            s.push_str("| rank | word | median | category |\n|---:|---|---:|---|\n");
            for x in low.iter().take(REPORT_ROWS) {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} |",
                    x.rank,
                    x.word,
                    ratio_2(x.median_ratio),
                    x.category.label()
                );
            }
            more(&mut s, low.len());
        }
        s.push('\n');
    }

    s.push_str("## Quotation differentials\n\n");
    if report.quotation.is_empty() {
        s.push_str("No engine was queried both quoted and unquoted.\n\n");
    }
    for q in &report.quotation {
        let below: Vec<_> = q.rows.iter().filter(|x| x.below_threshold).collect();
        let _ = writeln!(
            s,
            "### {}\n\n{} of {} words below {}.\n",
            q.engine,
            below.len(),
            q.rows.len(),
            q.threshold
        );
        if !below.is_empty() {
            s.push_str("| rank | word | median | category |\n|---:|---|---:|---|\n");
            for x in below.iter().take(REPORT_ROWS) {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} |",
                    x.rank,
                    x.word,
                    ratio_2(x.median_ratio),
                    x.category.label()
                );
            }
            more(&mut s, below.len());
        }
        s.push('\n');
    }

    s.push_str("## Removed-results banners\n\n");
    for b in &report.banners {
        let always = b.rows.iter().filter(|r| r.stats.always_censored).count();
        let once = b.rows.iter().filter(|r| r.stats.at_least_once).count();
        let _ = writeln!(s, "### {}\n", b.engine);
        let _ = writeln!(
            s,
            "{} observed words: {} always, {} sometimes, {} never.{}\n",
            b.rows.len(),
            always,
            once - always,
            b.rows.len() - once,
            if b.discriminative {
                ""
            } else {
                " Every word carried the banner at least once; no discriminative signal."
            }
        );
        let mut shown: Vec<_> = b
            .rows
            .iter()
            .filter(|r| r.stats.at_least_once && !r.stats.always_censored)
            .collect();
        shown.sort_by(|a, b| {
            b.ratio
                .total_cmp(&a.ratio)
                .then(a.stats.word.cmp(&b.stats.word))
        });
        if b.discriminative && !shown.is_empty() {
            s.push_str("| word | trigger | total | ratio |\n|---|---:|---:|---:|\n");
            for r in shown.iter().take(REPORT_ROWS) {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {:.2} |",
                    r.stats.word, r.stats.trigger_count, r.stats.observation_count, r.ratio
                );
            }
            more(&mut s, shown.len());
            s.push('\n');
        }
    }

    s.push_str("## TCP resets\n\n");
    for r in &report.resets {
        let _ = writeln!(
            s,
            "### {}\n\n{} words reset at least once.\n",
            r.engine,
            r.series.len()
        );
        if !r.series.is_empty() {
            let mut rows: Vec<_> = r.series.iter().collect();
            rows.sort_by(|a, b| b.reset_count.cmp(&a.reset_count).then(a.word.cmp(&b.word)));
            s.push_str(
                "| word | resets | total | longest streak | trace |\n|---|---:|---:|---:|---|\n",
            );
            for x in rows.iter().take(REPORT_ROWS) {
                let trace: String = x.trace.iter().copied().map(signal_char).collect();
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | `{}` |",
                    x.word,
                    x.reset_count,
                    x.observation_count,
                    x.longest_streak(),
                    trace
                );
            }
            more(&mut s, rows.len());
            s.push('\n');
        }
    }

    s.push_str("## Whitelists\n\n");
    let mut groups: BTreeMap<(&EngineId, Vec<&str>), Vec<&str>> = BTreeMap::new();
    let mut partial = 0usize;
    for f in &report.whitelists {
        if f.inference.partial {
            partial += 1;
            continue;
        }
        let domains: Vec<&str> = f
            .inference
            .domains
            .iter()
            .flatten()
            .map(String::as_str)
            .collect();
        groups
            .entry((&f.engine, domains))
            .or_default()
            .push(&f.word);
    }
    if groups.is_empty() {
        s.push_str("No whitelist suspected from full-depth results.\n");
    }
    for ((engine, domains), words) in &groups {
        let _ = writeln!(
            s,
            "- {engine}: {} words served only from {}",
            words.len(),
            domains.join(", ")
        );
    }
    if partial > 0 {
        let _ = writeln!(
            s,
            "\n{partial} further suspicions rest on fewer results than the inference depth."
        );
    }

    s.push_str("\n## Blacklist probes\n\n");
    if report.blacklist.is_empty() {
        s.push_str("No probe sentences analysed.\n");
    } else {
        s.push_str("| probe | reference | engine | missing domains |\n|---|---|---|---|\n");
        for f in &report.blacklist {
            let missing: Vec<&str> = f.missing_domains.iter().map(String::as_str).collect();
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                f.probe,
                f.reference,
                f.engine,
                missing.join(", ")
            );
        }
    }

    if let Some(t) = &report.categories {
        s.push_str("\n## Categories\n\n");
        s.push_str(&category_markdown(t));
    }
    s
}

fn more(s: &mut String, n: usize) {
    if n > REPORT_ROWS {
        let _ = writeln!(s, "\n{} more rows in the CSV output.", n - REPORT_ROWS);
    }
}
