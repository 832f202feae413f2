//! Parsers for list-valued flags.

use std::str::FromStr;

/// `5-12`, `5,7,9` or a mix such as `5-7,10`.
pub fn parse_ranges(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (number(a)?, number(b)?);
                if a > b {
                    return Err(format!("descending range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(number(part)?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    out.dedup();
    Ok(out)
}

fn number(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("{s:?} is not a non-negative integer"))
}

/// Comma-separated values of any `FromStr` type.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<T>, String>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// `cx,cy,r`.
pub fn parse_circle(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("{p:?} is not a number")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [cx, cy, r] => Ok((cx, cy, r)),
        _ => Err(format!("expected cx,cy,r but got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_ranges("5-12").unwrap(), (5..=12).collect::<Vec<_>>());
        assert_eq!(parse_ranges("5,7, 9").unwrap(), vec![5, 7, 9]);
        assert_eq!(parse_ranges("5-6,9").unwrap(), vec![5, 6, 9]);
        assert_eq!(parse_ranges("8").unwrap(), vec![8]);
        for bad in ["", "x", "9-5", "1-", "-3"] {
            assert!(parse_ranges(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists_and_circles() {
        assert_eq!(parse_list::<u8>("1,2").unwrap(), vec![1, 2]);
        assert!(parse_list::<u8>("1,x").is_err());
        assert_eq!(parse_circle("1, 2.5,3").unwrap(), (1.0, 2.5, 3.0));
        assert!(parse_circle("1,2").is_err());
    }
}
