//! Portable text format: `<stem>.json` carries `{max_mode, grid_size}` and
//! `<stem>.csv` carries rows `kx,ky,re,im` for every nonzero coefficient.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::fmt17;

use super::{ScalarField, Wavenumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub max_mode: usize,
    pub grid_size: usize,
}

pub fn write_field_csv<W: Write>(field: &ScalarField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kx", "ky", "re", "im"])?;
    for (k, c) in field.iter_nonzero() {
        w.write_record([k.kx.to_string(), k.ky.to_string(), fmt17(c.re), fmt17(c.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv<R: std::io::Read>(header: FieldHeader, input: R) -> Result<ScalarField> {
    let mut field = ScalarField::zeros_with_grid(header.max_mode, header.grid_size)?;
    let mut r = csv::Reader::from_reader(input);
    for row in r.deserialize() {
        let (kx, ky, re, im): (i64, i64, f64, f64) = row?;
        field.set(Wavenumber::new(kx, ky), Complex64::new(re, im))?;
    }
    Ok(field)
}

pub fn write_field(field: &ScalarField, dir: &Path, stem: &str) -> Result<()> {
    let header = FieldHeader { max_mode: field.max_mode(), grid_size: field.grid_size() };
    let json = File::create(dir.join(format!("{stem}.json")))?;
    serde_json::to_writer_pretty(BufWriter::new(json), &header)?;
    let csv = File::create(dir.join(format!("{stem}.csv")))?;
    write_field_csv(field, BufWriter::new(csv))
}

pub fn read_field(dir: &Path, stem: &str) -> Result<ScalarField> {
    let header: FieldHeader = serde_json::from_reader(File::open(dir.join(format!("{stem}.json")))?)?;
    read_field_csv(header, File::open(dir.join(format!("{stem}.csv")))?)
}
