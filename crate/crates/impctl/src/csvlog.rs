//! Per-run CSV logs.
//!
//! The header is fixed. Numbers use the shortest decimal that parses back to
//! the same `f64`.

use std::io::{Read, Write};

use impctl_core::sim::SimRecord;

pub const HEADER: [&str; 40] = [
    "t", "q1", "q2", "qd1", "qd2", "x", "y", "xd", "yd", "xdd_ref", "ydd_ref", "xe", "ye", "ex", "ey", "edx", "edy",
    "efx", "efy", "ax_gfte", "ay_gfte", "sx", "sy", "etax", "etay", "Fex", "Fey", "Fux", "Fuy", "tau1", "tau2", "dax",
    "day", "lam1", "lam2", "Nhatx", "Nhaty", "sigx", "sigy", "omega",
];

/// Values of one record in [`HEADER`] order.
pub fn row(r: &SimRecord) -> [f64; 40] {
    [
        r.t,
        r.q[0],
        r.q[1],
        r.qdot[0],
        r.qdot[1],
        r.x[0],
        r.x[1],
        r.x_d[0],
        r.x_d[1],
        r.xddot_d[0],
        r.xddot_d[1],
        r.x_e[0],
        r.x_e[1],
        r.e[0],
        r.e[1],
        r.edot[0],
        r.edot[1],
        r.e_f[0],
        r.e_f[1],
        r.alpha[0],
        r.alpha[1],
        r.s[0],
        r.s[1],
        r.eta[0],
        r.eta[1],
        r.f_e[0],
        r.f_e[1],
        r.f_u[0],
        r.f_u[1],
        r.tau[0],
        r.tau[1],
        r.delta_a[0],
        r.delta_a[1],
        r.lambda1,
        r.lambda2,
        r.n_hat[0],
        r.n_hat[1],
        r.sigma[0],
        r.sigma[1],
        r.omega,
    ]
}

pub fn write_records<W: Write>(out: W, records: &[SimRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    let mut fields: Vec<String> = Vec::with_capacity(HEADER.len());
    for r in records {
        fields.clear();
        fields.extend(row(r).iter().map(f64::to_string));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("header does not match the log schema")]
    Header,
    #[error("row {row}, column {column}: {value:?} is not a number")]
    Value { row: usize, column: &'static str, value: String },
}

/// Rows of a log written by [`write_records`], after checking the header.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<[f64; 40]>, ReadError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(HEADER) {
        return Err(ReadError::Header);
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut values = [0.0; 40];
        for (k, field) in rec.iter().enumerate() {
            values[k] = field.parse().map_err(|_| ReadError::Value {
                row: i + 1,
                column: HEADER[k],
                value: field.to_owned(),
            })?;
        }
        rows.push(values);
    }
    Ok(rows)
}

pub fn column(name: &str) -> Option<usize> {
    HEADER.iter().position(|h| *h == name)
}
