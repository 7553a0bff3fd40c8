//! CSV and JSON encodings of the toolkit's results.
//!
//! CSV numbers are written in shortest round-trip form, so reading a file
//! back recovers every value exactly. JSON numbers are rounded to 12
//! significant digits.

use std::io::{Read, Write};

use balance_limits_core::sweep::FragilityCurve;
use balance_limits_core::{Complex64, FragilitySurface, FrequencyResponse, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::psd::Spectrum;

pub const FREQ_RESPONSE_HEADER: &str = "omega_rad_s,re,im,mag,mag_db,phase_rad";
pub const CURVE_HEADER: &str = "abscissa,F_nats";
pub const HEATMAP_HEADER: &str = "l_m,l0_m,F_nats,singular";
pub const TRAJECTORY_HEADER: &str = "t_s,x_m,theta_rad,z_m,y_m,u_N";
pub const SPECTRUM_HEADER: &str = "freq_hz,power";

fn csv_err(what: &str) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        what: what.to_string(),
        source,
    }
}

/// Writes `header` even when `rows` is empty.
fn write_rows<W: Write, T: Serialize>(
    out: W,
    what: &str,
    header: &str,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header.split(',')).map_err(csv_err(what))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(what))?;
    }
    w.flush().map_err(|e| csv_err(what)(e.into()))
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(
    input: R,
    what: &str,
    header: &str,
) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let got = r
        .headers()
        .map_err(csv_err(what))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if got != header {
        return Err(CliError::data(
            what,
            format!("expected header `{header}`, found `{got}`"),
        ));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err(what))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqRow {
    pub omega_rad_s: f64,
    pub re: f64,
    pub im: f64,
    pub mag: f64,
    pub mag_db: f64,
    pub phase_rad: f64,
}

impl FreqRow {
    pub fn new(omega: f64, v: Complex64) -> Self {
        let mag = v.norm();
        FreqRow {
            omega_rad_s: omega,
            re: v.re,
            im: v.im,
            mag,
            mag_db: 20.0 * mag.log10(),
            phase_rad: v.arg(),
        }
    }
}

pub fn freq_rows(resp: &FrequencyResponse) -> Vec<FreqRow> {
    resp.omegas()
        .iter()
        .zip(resp.values())
        .map(|(&w, &v)| FreqRow::new(w, v))
        .collect()
}

pub fn write_freq_response<W: Write>(out: W, resp: &FrequencyResponse) -> Result<()> {
    write_rows(
        out,
        "frequency response",
        FREQ_RESPONSE_HEADER,
        freq_rows(resp),
    )
}

pub fn read_freq_response<R: Read>(input: R) -> Result<FrequencyResponse> {
    let rows: Vec<FreqRow> = read_rows(input, "frequency response", FREQ_RESPONSE_HEADER)?;
    let (omegas, values) = rows
        .iter()
        .map(|r| (r.omega_rad_s, Complex64::new(r.re, r.im)))
        .unzip();
    FrequencyResponse::new(omegas, values)
        .map_err(|e| CliError::data("frequency response", e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub abscissa: f64,
    #[serde(rename = "F_nats")]
    pub f_nats: f64,
}

pub fn write_curve<W: Write>(out: W, curve: &FragilityCurve) -> Result<()> {
    write_rows(
        out,
        "fragility curve",
        CURVE_HEADER,
        curve
            .points
            .iter()
            .map(|&(abscissa, f_nats)| CurveRow { abscissa, f_nats }),
    )
}

pub fn read_curve<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<CurveRow> = read_rows(input, "fragility curve", CURVE_HEADER)?;
    Ok(rows.into_iter().map(|r| (r.abscissa, r.f_nats)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub l_m: f64,
    pub l0_m: f64,
    /// Empty for masked cells.
    #[serde(rename = "F_nats")]
    pub f_nats: Option<f64>,
    pub singular: bool,
}

/// Long form, one row per cell in row-major `(l0, l)` order.
pub fn write_heatmap_long<W: Write>(out: W, surface: &FragilitySurface) -> Result<()> {
    write_rows(
        out,
        "heatmap",
        HEATMAP_HEADER,
        surface.iter().map(|(l_m, l0_m, f)| HeatmapRow {
            l_m,
            l0_m,
            f_nats: f,
            singular: f.is_none(),
        }),
    )
}

pub fn read_heatmap_long<R: Read>(input: R) -> Result<FragilitySurface> {
    let rows: Vec<HeatmapRow> = read_rows(input, "heatmap", HEATMAP_HEADER)?;
    let mut l_axis: Vec<f64> = Vec::new();
    let mut l0_axis: Vec<f64> = Vec::new();
    for r in &rows {
        if r.singular != r.f_nats.is_none() {
            return Err(CliError::data(
                "heatmap",
                "singular flag disagrees with F_nats",
            ));
        }
        if l0_axis.last() != Some(&r.l0_m) {
            l0_axis.push(r.l0_m);
        }
        if l0_axis.len() == 1 {
            l_axis.push(r.l_m);
        }
    }
    let cells = rows.iter().map(|r| r.f_nats).collect();
    FragilitySurface::from_cells(l_axis, l0_axis, cells)
        .map_err(|e| CliError::data("heatmap", e.to_string()))
}

/// Matrix form: header `l0_m\l_m` followed by the `l` axis, then one row per
/// `l0` with empty fields for masked cells.
pub fn write_heatmap_matrix<W: Write>(out: W, surface: &FragilitySurface) -> Result<()> {
    let what = "heatmap";
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["l0_m\\l_m".to_string()];
    header.extend(surface.l_axis.iter().map(|l| format!("{l:?}")));
    w.write_record(&header).map_err(csv_err(what))?;
    for (i, l0) in surface.l0_axis.iter().enumerate() {
        let mut rec = vec![format!("{l0:?}")];
        rec.extend((0..surface.l_axis.len()).map(|j| {
            surface
                .get(i, j)
                .map(|f| format!("{f:?}"))
                .unwrap_or_default()
        }));
        w.write_record(&rec).map_err(csv_err(what))?;
    }
    w.flush().map_err(|e| csv_err(what)(e.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t_s: f64,
    pub x_m: f64,
    pub theta_rad: f64,
    pub z_m: f64,
    pub y_m: f64,
    #[serde(rename = "u_N")]
    pub u_n: f64,
}

pub fn write_trajectory<W: Write>(out: W, tr: &Trajectory) -> Result<()> {
    write_rows(
        out,
        "trajectory",
        TRAJECTORY_HEADER,
        (0..tr.len()).map(|i| TrajectoryRow {
            t_s: tr.t[i],
            x_m: tr.x[i],
            theta_rad: tr.theta[i],
            z_m: tr.z[i],
            y_m: tr.y[i],
            u_n: tr.u[i],
        }),
    )
}

/// Reads a trajectory; `diverged` is not stored in the file and comes back
/// `false`.
pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory> {
    let rows: Vec<TrajectoryRow> = read_rows(input, "trajectory", TRAJECTORY_HEADER)?;
    let mut tr = Trajectory::default();
    for r in rows {
        tr.t.push(r.t_s);
        tr.x.push(r.x_m);
        tr.theta.push(r.theta_rad);
        tr.z.push(r.z_m);
        tr.y.push(r.y_m);
        tr.u.push(r.u_n);
    }
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub freq_hz: f64,
    pub power: f64,
}

pub fn write_spectrum<W: Write>(out: W, s: &Spectrum) -> Result<()> {
    write_rows(
        out,
        "spectrum",
        SPECTRUM_HEADER,
        s.freqs
            .iter()
            .zip(&s.power)
            .map(|(&freq_hz, &power)| SpectrumRow { freq_hz, power }),
    )
}

pub fn read_spectrum<R: Read>(input: R) -> Result<Spectrum> {
    let rows: Vec<SpectrumRow> = read_rows(input, "spectrum", SPECTRUM_HEADER)?;
    Ok(Spectrum {
        freqs: rows.iter().map(|r| r.freq_hz).collect(),
        power: rows.iter().map(|r| r.power).collect(),
    })
}

/// `x` rounded to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Rounds every floating-point number in `v` to 12 significant digits.
/// Integers are left alone.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig12)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline and 12-significant-digit numbers.
pub fn to_json_text<T: Serialize>(value: &T) -> Result<String> {
    let json_err = |source| CliError::Json {
        what: "json output".to_string(),
        source,
    };
    let mut v = serde_json::to_value(value).map_err(json_err)?;
    round_json(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(json_err)?;
    text.push('\n');
    Ok(text)
}
