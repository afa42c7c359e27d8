//! Synthetic item banks and the bank CSV format.
//!
//! A bank file is UTF-8 CSV with LF line endings and the header `id,a,b,c`.
//! Values are written with 17 significant digits so a save/load round trip is
//! exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::irt::{ItemBank, ItemParams};
use crate::rng::stream_rng;

pub const BANK_HEADER: [&str; 4] = ["id", "a", "b", "c"];

/// Recipe for a bank with uniformly distributed `a` and `b` and a common `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BankGenSpec {
    pub m: usize,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub c_fixed: f64,
    pub seed: u64,
}

impl Default for BankGenSpec {
    fn default() -> Self {
        Self { m: 300, a_range: (1.0, 3.0), b_range: (-3.0, 3.0), c_fixed: 0.2, seed: 0 }
    }
}

impl BankGenSpec {
    pub fn validate(&self) -> Result<()> {
        let (a_min, a_max) = self.a_range;
        let (b_min, b_max) = self.b_range;
        if self.m == 0 {
            return Err(Error::Domain("bank size m must be at least 1".into()));
        }
        if !(a_min > 0.0 && a_min <= a_max && a_max.is_finite()) {
            return Err(Error::Domain(format!("need 0 < a_min <= a_max, got [{a_min}, {a_max}]")));
        }
        if !(b_min.is_finite() && b_max.is_finite() && b_min <= b_max) {
            return Err(Error::Domain(format!("need b_min <= b_max, got [{b_min}, {b_max}]")));
        }
        if !(0.0..1.0).contains(&self.c_fixed) {
            return Err(Error::Domain(format!("c must lie in [0, 1), got {}", self.c_fixed)));
        }
        Ok(())
    }
}

/// Draws the bank from stream 0 of `spec.seed`: for each item in id order,
/// `a` then `b`, each uniform on its closed range.
pub fn generate_bank(spec: &BankGenSpec) -> Result<ItemBank> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0);
    let (a_min, a_max) = spec.a_range;
    let (b_min, b_max) = spec.b_range;
    let items = (0..spec.m)
        .map(|_| {
            let a = rng.random_range(a_min..=a_max);
            let b = rng.random_range(b_min..=b_max);
            ItemParams::new(a, b, spec.c_fixed)
        })
        .collect::<Result<Vec<_>>>()?;
    ItemBank::new(items)
}

/// Positional decimal with 17 significant digits.
pub fn format_sig17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.16}");
    }
    let exp10 = v.abs().log10().floor() as i32;
    let decimals = (16 - exp10).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn write_bank<W: Write>(bank: &ItemBank, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", BANK_HEADER.join(","))?;
    for (id, item) in bank.items().iter().enumerate() {
        writeln!(out, "{id},{},{},{}", format_sig17(item.a()), format_sig17(item.b()), format_sig17(item.c()))?;
    }
    out.flush()
}

pub fn save_bank(bank: &ItemBank, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_bank(bank, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_bank(path: &Path) -> Result<ItemBank> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_bank(file, path)
}

/// Parses bank CSV from any reader; `path` is only used in error messages.
pub fn read_bank<R: std::io::Read>(input: R, path: &Path) -> Result<ItemBank> {
    let parse_err = |line: u64, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != BANK_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `id,a,b,c`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut rows: Vec<(u64, usize, ItemParams)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(k).unwrap_or("");
        let id: usize = field(0).parse().map_err(|_| parse_err(line, format!("bad item id {:?}", field(0))))?;
        let num = |k: usize| {
            field(k)
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("bad `{}` value {:?}", BANK_HEADER[k], field(k))))
        };
        let (a, b, c) = (num(1)?, num(2)?, num(3)?);
        let params = ItemParams::new(a, b, c).map_err(|e| parse_err(line, e.to_string()))?;
        rows.push((line, id, params));
    }

    let m = rows.len();
    if m == 0 {
        return Err(parse_err(1, "bank file has no items".into()));
    }
    let mut slots: Vec<Option<ItemParams>> = vec![None; m];
    for (line, id, params) in rows {
        match slots.get_mut(id) {
            None => return Err(parse_err(line, format!("item id {id} outside 0..{m}; ids must be contiguous from 0"))),
            Some(Some(_)) => return Err(parse_err(line, format!("duplicate item id {id}"))),
            Some(slot) => *slot = Some(params),
        }
    }
    // m rows, m slots, no duplicates: every slot is filled.
    ItemBank::new(slots.into_iter().map(|s| s.expect("filled")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<ItemBank> {
        read_bank(text.as_bytes(), Path::new("mem.csv"))
    }

    #[test]
    fn defaults_match_recipe() {
        let bank = generate_bank(&BankGenSpec { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(bank.len(), 300);
        for it in bank.items() {
            assert!((1.0..=3.0).contains(&it.a()));
            assert!((-3.0..=3.0).contains(&it.b()));
            assert_eq!(it.c(), 0.2);
        }
        let big = generate_bank(&BankGenSpec { m: 753, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(big.len(), 753);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = BankGenSpec { seed: 99, ..Default::default() };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_bank(&generate_bank(&spec).unwrap(), &mut a).unwrap();
        write_bank(&generate_bank(&spec).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let other = generate_bank(&BankGenSpec { seed: 100, ..Default::default() }).unwrap();
        assert_ne!(generate_bank(&spec).unwrap(), other);
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            BankGenSpec { m: 0, ..Default::default() },
            BankGenSpec { a_range: (0.0, 1.0), ..Default::default() },
            BankGenSpec { a_range: (2.0, 1.0), ..Default::default() },
            BankGenSpec { b_range: (1.0, -1.0), ..Default::default() },
            BankGenSpec { c_fixed: 1.5, ..Default::default() },
        ];
        for spec in bad {
            assert!(generate_bank(&spec).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn parameter_means_converge() {
        let bank = generate_bank(&BankGenSpec { m: 100_000, seed: 1, ..Default::default() }).unwrap();
        let n = bank.len() as f64;
        let mean_a = bank.items().iter().map(|i| i.a()).sum::<f64>() / n;
        let mean_b = bank.items().iter().map(|i| i.b()).sum::<f64>() / n;
        assert!((1.99..=2.01).contains(&mean_a), "{mean_a}");
        assert!((-0.02..=0.02).contains(&mean_b), "{mean_b}");
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.csv");
        let bank = generate_bank(&BankGenSpec { seed: 5, ..Default::default() }).unwrap();
        save_bank(&bank, &path).unwrap();
        assert_eq!(load_bank(&path).unwrap(), bank);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 301);
        assert!(!text.contains('\r'));

        let one = ItemBank::new(vec![ItemParams::new(1.0, 0.0, 0.2).unwrap()]).unwrap();
        save_bank(&one, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn empty_path_is_io_error() {
        let bank = ItemBank::new(vec![ItemParams::new(1.0, 0.0, 0.2).unwrap()]).unwrap();
        assert!(matches!(save_bank(&bank, Path::new("")), Err(Error::Io { .. })));
        assert!(matches!(load_bank(Path::new("/nonexistent/bank.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn sig17_is_exact() {
        for v in [0.1, -2.6457513110645906, 1.0 / 3.0, 2.9999999999999996, 1e-7, 12345.678, 0.0] {
            assert_eq!(format_sig17(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_sig17(0.2), "0.20000000000000001");
    }

    #[test]
    fn load_validates_rows() {
        assert_eq!(read("id,a,b,c\n1,1.5,0,0.2\n0,2,1,0.2\n").unwrap().items()[0].a(), 2.0);
        let dup = read("id,a,b,c\n0,1,0,0.2\n0,2,0,0.2\n").unwrap_err();
        assert!(matches!(dup, Error::Parse { line: 3, .. }), "{dup}");
        let neg = read("id,a,b,c\n0,-1,0,0.2\n").unwrap_err();
        assert!(matches!(neg, Error::Parse { line: 2, .. }), "{neg}");
        assert!(read("id,a,b,c\n0,1,0,1.0\n").is_err());
        assert!(read("id,a,b,c\n0,1,zero,0.2\n").is_err());
        assert!(read("id,a,b,c\n5,1,0,0.2\n").is_err());
        assert!(read("id,a,b\n0,1,0\n").is_err());
        assert!(read("id,a,b,c\n").is_err());
    }
}
