//! Text persistence for feature frames. Floats are written in shortest
//! round-trip form so a load-save cycle is byte-identical and the content
//! fingerprint survives; raw category codes ride along so splits and CV
//! re-fit encodings exactly as they would in memory.
//!
//! Layout:
//! ```text
//! roadcast-frame v1
//! columns: <name>:<kind>,...
//! rawcat: <col>:<folds>:<smoothing>:<vocab items |-separated, %-escaped>
//! codes: <col>:<code>,...
//! fingerprint: <16 hex digits>
//! rows:
//! <cell %-escaped>,<bucket_start>,<target>,<feature>,...
//! ```

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use roadcast_core::frame::{CatColumn, ColumnKind, ColumnMeta, FeatureFrame, RowKey};

use crate::error::AppError;

pub const FORMAT_LINE: &str = "roadcast-frame v1";

/// Escapes the separator bytes this format reserves.
fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => out.push_str("%25"),
            ',' => out.push_str("%2C"),
            '|' => out.push_str("%7C"),
            ':' => out.push_str("%3A"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, AppError> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = bytes
                .get(i + 1..i + 3)
                .ok_or_else(|| AppError::Validation("frame file corrupt: truncated escape".into()))?;
            let v = u8::from_str_radix(std::str::from_utf8(hex).unwrap_or("zz"), 16)
                .map_err(|_| AppError::Validation("frame file corrupt: bad escape".into()))?;
            out.push(v);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| AppError::Validation("frame file corrupt: non-utf8 escape".into()))
}

pub fn save_frame(path: &Path, frame: &FeatureFrame) -> Result<(), AppError> {
    let file = std::fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "{FORMAT_LINE}")?;
        let cols: Vec<String> = frame
            .columns
            .iter()
            .map(|c| format!("{}:{}", escape(&c.name), c.kind.as_str()))
            .collect();
        writeln!(w, "columns: {}", cols.join(","))?;
        for (&col, cat) in &frame.raw_categories {
            let vocab: Vec<String> = cat.vocab.iter().map(|v| escape(v)).collect();
            writeln!(w, "rawcat: {col}:{}:{:?}:{}", cat.folds, cat.smoothing, vocab.join("|"))?;
            let codes: Vec<String> = cat.codes.iter().map(|c| c.to_string()).collect();
            writeln!(w, "codes: {col}:{}", codes.join(","))?;
        }
        writeln!(w, "fingerprint: {:016x}", frame.fingerprint())?;
        writeln!(w, "rows:")?;
        for i in 0..frame.n_rows() {
            let key = &frame.row_keys[i];
            write!(w, "{},{},{:?}", escape(&key.cell), key.bucket_start, frame.targets[i])?;
            for v in frame.row(i) {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    })();
    res.map_err(|e| AppError::io(path, e))
}

fn corrupt(what: &str) -> AppError {
    AppError::Validation(format!("frame file corrupt: {what}"))
}

pub fn load_frame(path: &Path) -> Result<FeatureFrame, AppError> {
    let file = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || -> Result<String, AppError> {
        lines
            .next()
            .ok_or_else(|| corrupt("unexpected end of file"))?
            .map_err(|e| AppError::io(path, e))
    };

    let head = next()?;
    if head != FORMAT_LINE {
        return Err(AppError::Compat(format!(
            "{}: not a roadcast frame file (found \"{head}\")",
            path.display()
        )));
    }

    let col_line = next()?;
    let cols_str = col_line.strip_prefix("columns: ").ok_or_else(|| corrupt("missing columns line"))?;
    let mut columns = Vec::new();
    for part in cols_str.split(',') {
        let (name, kind) = part.rsplit_once(':').ok_or_else(|| corrupt("bad column spec"))?;
        let kind = ColumnKind::parse(kind).ok_or_else(|| corrupt("unknown column kind"))?;
        columns.push(ColumnMeta::new(unescape(name)?, kind));
    }
    let n_cols = columns.len();

    // optional rawcat/codes pairs, then the fingerprint line
    let mut raw: Vec<(usize, CatColumn)> = Vec::new();
    let stored_fp: u64;
    loop {
        let line = next()?;
        if let Some(rest) = line.strip_prefix("rawcat: ") {
            let mut it = rest.splitn(4, ':');
            let col: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| corrupt("bad rawcat column"))?;
            let folds: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| corrupt("bad rawcat folds"))?;
            let smoothing: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| corrupt("bad rawcat smoothing"))?;
            let vocab_str = it.next().ok_or_else(|| corrupt("missing rawcat vocab"))?;
            let vocab = vocab_str
                .split('|')
                .filter(|s| !s.is_empty())
                .map(unescape)
                .collect::<Result<Vec<String>, AppError>>()?;
            let codes_line = next()?;
            let codes_rest =
                codes_line.strip_prefix("codes: ").ok_or_else(|| corrupt("missing codes line"))?;
            let (code_col, code_list) =
                codes_rest.split_once(':').ok_or_else(|| corrupt("bad codes line"))?;
            if code_col.parse::<usize>().ok() != Some(col) {
                return Err(corrupt("codes column does not match rawcat"));
            }
            let codes = code_list
                .split(',')
                .map(|s| s.parse::<u32>().map_err(|_| corrupt("bad code value")))
                .collect::<Result<Vec<u32>, AppError>>()?;
            raw.push((col, CatColumn { vocab, codes, folds, smoothing }));
        } else if let Some(rest) = line.strip_prefix("fingerprint: ") {
            stored_fp = u64::from_str_radix(rest, 16).map_err(|_| corrupt("bad fingerprint"))?;
            break;
        } else {
            return Err(corrupt("unexpected header line"));
        }
    }

    if next()? != "rows:" {
        return Err(corrupt("missing rows marker"));
    }

    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut row_keys = Vec::new();
    for line in lines {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let cell = unescape(parts.next().ok_or_else(|| corrupt("empty row"))?)?;
        let bucket_start: i64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt("bad bucket start"))?;
        let target: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt("bad target"))?;
        let features = parts
            .map(|s| s.parse::<f64>().map_err(|_| corrupt("bad feature value")))
            .collect::<Result<Vec<f64>, AppError>>()?;
        if features.len() != n_cols {
            return Err(corrupt("row width does not match columns"));
        }
        data.extend_from_slice(&features);
        targets.push(target);
        row_keys.push(RowKey { cell, bucket_start });
    }

    let n_rows = targets.len();
    let mut frame = FeatureFrame::from_parts(columns, data, targets, row_keys)
        .map_err(AppError::Core)?;
    for (col, cat) in raw {
        if col >= n_cols || cat.codes.len() != n_rows {
            return Err(corrupt("raw category shape mismatch"));
        }
        frame.raw_categories.insert(col, cat);
    }
    if frame.fingerprint() != stored_fp {
        return Err(corrupt("content does not match stored fingerprint"));
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use roadcast_core::SplitSpec;

    fn sample_frame() -> FeatureFrame {
        let columns = vec![
            ColumnMeta::new("x", ColumnKind::Numeric),
            ColumnMeta::new("wc_te", ColumnKind::TargetEncoded),
        ];
        let mut f = FeatureFrame::new(columns);
        for i in 0..12 {
            let cell = if i % 2 == 0 { "CA/Los Angeles" } else { "TX/Waco" };
            f.push_row(
                RowKey { cell: cell.to_string(), bucket_start: 86_400 * (i as i64 / 2) },
                &[i as f64 * 0.1, 0.0],
                (i % 4) as f64,
            );
        }
        f.raw_categories.insert(
            1,
            CatColumn {
                vocab: vec!["Clear".into(), "Light Rain".into(), "other".into()],
                codes: (0..12).map(|i| (i % 3) as u32).collect(),
                folds: 3,
                smoothing: 5.0,
            },
        );
        f
    }

    #[test]
    fn frame_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.frame");
        let f = sample_frame();
        save_frame(&path, &f).unwrap();
        let g = load_frame(&path).unwrap();
        assert_eq!(f.fingerprint(), g.fingerprint());
        assert_eq!(f.row_keys, g.row_keys);
        assert_eq!(f.targets, g.targets);
        assert_eq!(f.raw_categories[&1].vocab, g.raw_categories[&1].vocab);
        assert_eq!(f.raw_categories[&1].codes, g.raw_categories[&1].codes);

        // a second save of the loaded frame is byte-identical
        let path2 = dir.path().join("again.frame");
        save_frame(&path2, &g).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn split_after_load_matches_split_before_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.frame");
        let f = sample_frame();
        save_frame(&path, &f).unwrap();
        let g = load_frame(&path).unwrap();
        let spec = SplitSpec::temporal(0.25);
        let (tr_a, te_a) = f.split(&spec).unwrap();
        let (tr_b, te_b) = g.split(&spec).unwrap();
        assert_eq!(tr_a.fingerprint(), tr_b.fingerprint());
        assert_eq!(te_a.fingerprint(), te_b.fingerprint());
    }

    #[test]
    fn wrong_format_line_is_compat_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.frame");
        std::fs::write(&path, "something else\n").unwrap();
        let err = load_frame(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn tampered_value_fails_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.frame");
        save_frame(&path, &sample_frame()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("0.1", "0.2");
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        let err = load_frame(&path).unwrap_err();
        assert!(err.to_string().contains("fingerprint"), "{err}");
    }

    #[test]
    fn escape_round_trips_reserved_bytes() {
        for s in ["CA/Los Angeles", "a,b|c:d%e", "line\nbreak", ""] {
            assert_eq!(unescape(&escape(s)).unwrap(), s);
        }
    }
}
