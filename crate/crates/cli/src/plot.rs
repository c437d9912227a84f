//! gnuplot scripts for sweep and profile CSVs.

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::{write_artifact, CSV_MAGIC};

const SWEEP_HEADER: &str = "mu1,mu2,lambda_p,lambda_low,lambda_high,iterations,limit_target,gap,status";
const PROFILE_HEADER: &str = "x,u1,u2,limit_u1,limit_u2,gap_u1,gap_u2";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layout {
    Sweep,
    Profile,
}

/// Writes `<stem>.gp` into `out_dir` (or next to the CSV) and returns its path.
pub fn emit_plot_script(csv_path: &Path, out_dir: Option<&Path>) -> Result<PathBuf> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let (_, script) = plot_script(&text, &data_reference(csv_path, out_dir))?;
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into());
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| csv_path.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let target = dir.join(format!("{stem}.gp"));
    write_artifact(&target, &script)?;
    Ok(target)
}

fn data_reference(csv_path: &Path, out_dir: Option<&Path>) -> String {
    let same_dir = match (out_dir, csv_path.parent()) {
        (None, _) => true,
        (Some(o), Some(p)) => o == p || (p.as_os_str().is_empty() && o == Path::new(".")),
        _ => false,
    };
    if same_dir {
        csv_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default()
    } else {
        csv_path.display().to_string()
    }
}

/// Builds the script for CSV `text`; `data` is how the script refers to the file.
pub fn plot_script(text: &str, data: &str) -> Result<(Layout, String)> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_MAGIC) {
        return Err(CliError::config(format!("not a nonlocal-spectra CSV (first line must be `{CSV_MAGIC}`)")));
    }
    let mut meta = Vec::new();
    let mut skip = 1;
    let mut header = None;
    for l in lines.by_ref() {
        skip += 1;
        if let Some(c) = l.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        header = Some(l.to_string());
        break;
    }
    let header = header.ok_or_else(|| CliError::config("CSV has no column header"))?;
    let get = |k: &str| meta.iter().find(|(m, _)| m == k).map(|(_, v)| v.as_str());
    let quoted = data.replace('"', "\\\"");
    let mut s = String::from("# gnuplot script\nset datafile separator \",\"\nset key outside right\nset grid\n");
    if header == SWEEP_HEADER {
        let path = get("path").unwrap_or("sweep");
        let (col, label) = match path {
            "antidiagonal" => (2, "t = mu2 (mu1 = 1/t)"),
            "antidiagonal-mirrored" => (1, "t = mu1 (mu2 = 1/t)"),
            "mu-to-zero" | "mu-to-infinity" => (1, "mu1 = mu2"),
            _ => (1, "mu1"),
        };
        let target = lines.find_map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            cols.get(6).and_then(|t| t.parse::<f64>().ok())
        });
        s += &format!(
            "set logscale x\nset xlabel \"{label}\"\nset ylabel \"lambda_p\"\nset title \"{} along {path}\"\n",
            get("problem").unwrap_or("")
        );
        s += &format!("plot \"{quoted}\" skip {skip} using {col}:3 with linespoints title \"lambda_p\"");
        if let Some(t) = target {
            s += &format!(", \\\n     {t:e} with lines dashtype 2 title \"{}\"", get("limit").unwrap_or("limit"));
        }
        s += "\n";
        Ok((Layout::Sweep, s))
    } else if header == PROFILE_HEADER {
        s += &format!(
            "set xlabel \"x\"\nset ylabel \"density\"\nset title \"{} against the {} limit\"\n",
            get("problem").unwrap_or(""),
            get("limit").unwrap_or("")
        );
        s += &format!(
            "plot \"{quoted}\" skip {skip} using 1:2 with lines title \"u1\", \\\n     \"\" skip {skip} using 1:3 with lines title \"u2\", \\\n     \"\" skip {skip} using 1:4 with lines dashtype 2 title \"limit u1\", \\\n     \"\" skip {skip} using 1:5 with lines dashtype 2 title \"limit u2\"\n"
        );
        Ok((Layout::Profile, s))
    } else {
        Err(CliError::config(format!("unknown column layout: {header}")))
    }
}
