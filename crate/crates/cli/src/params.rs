//! Parsers for list- and range-valued flags.

use gpq_core::dr::RangeParam;

/// `"4"`, `"2,4,8"` or `"2..6"` (inclusive, stepping by `step`).
pub fn parse_range(s: &str, step: u64) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a
                .parse()
                .map_err(|_| format!("bad range start in {part:?}"))?;
            let b: u64 = b
                .trim_start_matches('=')
                .parse()
                .map_err(|_| format!("bad range end in {part:?}"))?;
            if a > b {
                return Err(format!("empty range {part:?}"));
            }
            out.extend((a..=b).step_by(step as usize));
        } else {
            out.push(
                part.parse()
                    .map_err(|_| format!("not a number: {part:?}"))?,
            );
        }
    }
    Ok(out)
}

/// Even depths, as in `--k 2..10`.
pub fn parse_depths(s: &str) -> Result<Vec<u32>, String> {
    parse_range(s, 2)?
        .into_iter()
        .map(|k| u32::try_from(k).map_err(|_| format!("k = {k} is too large")))
        .collect()
}

/// Range sizes: numbers or `inf`.
pub fn parse_r(s: &str) -> Result<RangeParam, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(RangeParam::Infinite);
    }
    let r: u64 = s
        .parse()
        .map_err(|_| format!("r must be a positive integer or inf, got {s:?}"))?;
    RangeParam::finite(r).map_err(|e| e.to_string())
}

pub fn r_label(r: RangeParam) -> String {
    match r {
        RangeParam::Finite(r) => r.to_string(),
        RangeParam::Infinite => "inf".into(),
    }
}
