use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Method;
use super::metrics::{mean_std, Confusion, RepetitionMetrics};
use crate::error::{Error, Result};
use crate::io::ClassId;
use crate::prep::{BandName, Domain};

pub const CSV_HEADER: &str = "method,domain,band,class,acc_mean,acc_std";
pub const RUN_FILE: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    /// Stream-level accuracy over repetitions.
    pub acc_mean: f64,
    pub acc_std: f64,
    /// Fragment-level accuracy over repetitions.
    pub fragment_acc_mean: f64,
    pub fragment_acc_std: f64,
}

/// Aggregate of one method over all repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub domain: Domain,
    pub band: BandName,
    pub seed: u64,
    pub repetitions: usize,
    pub classes: Vec<ClassSummary>,
    pub stream_acc_mean: f64,
    pub stream_acc_std: f64,
    pub fragment_acc_mean: f64,
    pub fragment_acc_std: f64,
    pub single_fragment_acc_mean: f64,
    pub single_fragment_acc_std: f64,
    /// Stream confusion summed over repetitions.
    pub confusion: Confusion,
    pub per_repetition: Vec<RepetitionMetrics>,
}

fn class_stats(reps: &[RepetitionMetrics], class: usize, pick: impl Fn(&RepetitionMetrics) -> &Confusion) -> (f64, f64) {
    let v: Vec<f64> = reps.iter().filter_map(|r| pick(r).class_accuracy(class)).collect();
    mean_std(&v)
}

impl MethodSummary {
    pub fn from_repetitions(
        method: Method,
        domain: Domain,
        band: BandName,
        seed: u64,
        reps: Vec<RepetitionMetrics>,
    ) -> Self {
        let classes = reps.first().map_or(0, |r| r.stream.classes());
        let mut confusion = Confusion::new(classes);
        for r in &reps {
            confusion.merge(&r.stream);
        }
        let class_rows = (0..classes)
            .map(|c| {
                let (acc_mean, acc_std) = class_stats(&reps, c, |r| &r.stream);
                let (fragment_acc_mean, fragment_acc_std) = class_stats(&reps, c, |r| &r.fragment);
                ClassSummary {
                    class: ClassId(c as u8).name(),
                    acc_mean,
                    acc_std,
                    fragment_acc_mean,
                    fragment_acc_std,
                }
            })
            .collect();
        let col = |f: &dyn Fn(&RepetitionMetrics) -> f64| mean_std(&reps.iter().map(f).collect::<Vec<_>>());
        let (stream_acc_mean, stream_acc_std) = col(&|r| r.stream.accuracy());
        let (fragment_acc_mean, fragment_acc_std) = col(&|r| r.fragment.accuracy());
        let (single_fragment_acc_mean, single_fragment_acc_std) = col(&|r| r.single_fragment_accuracy);
        MethodSummary {
            method,
            domain,
            band,
            seed,
            repetitions: reps.len(),
            classes: class_rows,
            stream_acc_mean,
            stream_acc_std,
            fragment_acc_mean,
            fragment_acc_std,
            single_fragment_acc_mean,
            single_fragment_acc_std,
            confusion,
            per_repetition: reps,
        }
    }

    fn sort_key(&self) -> (usize, Domain, BandName) {
        (self.method.rank(), self.domain, self.band)
    }
}

/// One CSV line per method and class, six decimals, `\n` endings.
pub fn render_csv(rows: &[MethodSummary]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        for c in &r.classes {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                r.method, r.domain, r.band, c.class, c.acc_mean, c.acc_std
            )
            .unwrap();
        }
    }
    out
}

/// A table line: per-class accuracies in the time and frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TableLine {
    pub label: String,
    pub time: Option<Vec<f64>>,
    pub frequency: Option<Vec<f64>>,
}

pub fn render_table(lines: &[TableLine], classes: &[String]) -> String {
    let mut out = String::from("| Methods |");
    for domain in ["time", "frequency"] {
        for c in classes {
            write!(out, " {c} ({domain}) |").unwrap();
        }
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(2 * classes.len()));
    out.push('\n');
    for line in lines {
        write!(out, "| {} |", line.label).unwrap();
        for values in [&line.time, &line.frequency] {
            for i in 0..classes.len() {
                match values.as_ref().and_then(|v| v.get(i)) {
                    Some(v) => write!(out, " {v:.3} |").unwrap(),
                    None => out.push_str(" - |"),
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Markdown table with method rows and per-class stream accuracy columns
/// for both domains.
pub fn render_markdown(rows: &[MethodSummary]) -> String {
    let mut lines: Vec<(usize, BandName, TableLine)> = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    for r in rows {
        if r.classes.len() > classes.len() {
            classes = r.classes.iter().map(|c| c.class.clone()).collect();
        }
        let label = match r.band {
            BandName::Broadband => r.method.to_string(),
            band => format!("{} ({band})", r.method),
        };
        let idx = match lines.iter().position(|(_, _, l)| l.label == label) {
            Some(i) => i,
            None => {
                lines.push((
                    r.method.rank(),
                    r.band,
                    TableLine {
                        label,
                        time: None,
                        frequency: None,
                    },
                ));
                lines.len() - 1
            }
        };
        let values = Some(r.classes.iter().map(|c| c.acc_mean).collect());
        match r.domain {
            Domain::Time => lines[idx].2.time = values,
            Domain::Frequency => lines[idx].2.frequency = values,
        }
    }
    lines.sort_by_key(|(rank, band, _)| (*rank, *band));
    let lines: Vec<TableLine> = lines.into_iter().map(|(_, _, l)| l).collect();
    render_table(&lines, &classes)
}

pub fn write_run(dir: &Path, rows: &[MethodSummary]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    let mut json = serde_json::to_string_pretty(rows).expect("summaries serialize");
    json.push('\n');
    write(RUN_FILE, json)?;
    write("report.csv", render_csv(rows))?;
    write("report.md", render_markdown(rows))
}

fn find_runs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_runs(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == RUN_FILE) {
            out.push(p);
        }
    }
    Ok(())
}

/// Every summary found in `run.json` files under `dir`, in table order.
pub fn collect_runs(dir: &Path) -> Result<Vec<MethodSummary>> {
    let mut files = Vec::new();
    find_runs(dir, &mut files)?;
    let mut rows = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
        let mut part: Vec<MethodSummary> =
            serde_json::from_str(&text).map_err(|e| Error::format(&f, e.to_string()))?;
        rows.append(&mut part);
    }
    rows.sort_by_key(MethodSummary::sort_key);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::HeadKind;
    use crate::nn::NetworkKind;

    fn rep(i: usize, hits: [usize; 3]) -> RepetitionMetrics {
        let mut stream = Confusion::new(3);
        for (c, &h) in hits.iter().enumerate() {
            for k in 0..4 {
                stream.add(c, if k < h { c } else { (c + 1) % 3 });
            }
        }
        RepetitionMetrics {
            repetition: i,
            fragment: stream.clone(),
            stream,
            single_fragment_accuracy: 0.5,
        }
    }

    fn summary() -> MethodSummary {
        let m = Method {
            network: NetworkKind::Cnn,
            head: HeadKind::Rf,
        };
        MethodSummary::from_repetitions(m, Domain::Time, BandName::Broadband, 7, vec![rep(0, [4, 2, 3]), rep(1, [4, 4, 1])])
    }

    #[test]
    fn csv_layout() {
        let csv = render_csv(&[summary()]);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "CNNV+RF,time,broadband,FES,1.000000,0.000000");
        assert_eq!(lines[2], "CNNV+RF,time,broadband,HC,0.750000,0.353553");
        assert_eq!(lines[3], "CNNV+RF,time,broadband,CHR,0.500000,0.353553");
        assert_eq!(lines[4], "");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn table_layout_fixture() {
        let classes: Vec<String> = ["FES", "HC", "CHR"].map(String::from).to_vec();
        let table = render_table(
            &[TableLine {
                label: "CNNV+RF".into(),
                time: Some(vec![0.967, 0.992, 0.816]),
                frequency: None,
            }],
            &classes,
        );
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(
            lines[0],
            "| Methods | FES (time) | HC (time) | CHR (time) | FES (frequency) | HC (frequency) | CHR (frequency) |"
        );
        assert!(lines[2].starts_with("| CNNV+RF | 0.967 | 0.992 | 0.816 |"));
        let md = render_markdown(&[summary()]);
        assert!(md.contains("| CNNV+RF | 1.000 | 0.750 | 0.500 | - | - | - |"), "{md}");
    }

    #[test]
    fn runs_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        write_run(&dir.path().join("a"), &[summary()]).unwrap();
        let back = collect_runs(dir.path()).unwrap();
        assert_eq!(back, vec![summary()]);
    }
}
