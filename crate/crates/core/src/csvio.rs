//! CSV serialization for every trace and ensemble format the tools exchange.
//!
//! All floating-point values are written with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly; parameter blocks ride along
//! as `# key = value` comment lines above the header row. Read errors name
//! the offending file and line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::calfit::{PairedNoise, QubitCalibration, S21Trace, SaTrace};
use crate::cqed::{CavityQubitParams, QubitState, StarkMap};
use crate::error::{Error, Result};
use crate::rfchain::{ChainComparison, GainCurve, SystemNoiseResult};
use crate::shots::{Histogram, Shot, ShotEnsemble};
use crate::twline::{BlochPoint, GainProfile};

/// 17-significant-digit rendering; exact `f64` round trip.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn parse_f64(path: &Path, line_no: usize, field: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::data(format!("{}:{line_no}: bad {field} value {raw:?}", path.display())))
}

/// Split a CSV body into (comment key/value pairs, data rows with line
/// numbers). Lines starting with `#` are comments; `# key = value` pairs are
/// collected, other comments ignored.
fn split_csv(contents: &str) -> (Vec<(String, String)>, Vec<(usize, Vec<String>)>) {
    let mut params = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in contents.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                params.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        rows.push((line_no, trimmed.split(',').map(|s| s.trim().to_string()).collect()));
    }
    (params, rows)
}

/// Validate a header row and return the data rows after it.
fn expect_header<'a>(
    path: &Path,
    rows: &'a [(usize, Vec<String>)],
    expected: &[&str],
) -> Result<&'a [(usize, Vec<String>)]> {
    let Some((line_no, header)) = rows.first() else {
        return Err(Error::data(format!("{}: empty file", path.display())));
    };
    let got: Vec<&str> = header.iter().map(String::as_str).collect();
    if got != expected {
        return Err(Error::data(format!(
            "{}:{line_no}: expected header {expected:?}, got {got:?}",
            path.display()
        )));
    }
    Ok(&rows[1..])
}

fn expect_cols(path: &Path, line_no: usize, row: &[String], n: usize) -> Result<()> {
    if row.len() != n {
        return Err(Error::data(format!(
            "{}:{line_no}: expected {n} columns, got {}",
            path.display(),
            row.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Complex transmission traces
// ---------------------------------------------------------------------------

pub fn write_s21_csv(path: &Path, trace: &S21Trace) -> Result<()> {
    trace.validate()?;
    let mut out = String::from("freq_hz,re,im\n");
    for (i, &f) in trace.freqs_hz.iter().enumerate() {
        let z = trace.s21[i];
        let _ = writeln!(out, "{},{},{}", fmt(f), fmt(z.re), fmt(z.im));
    }
    write_file(path, &out)
}

pub fn read_s21_csv(path: &Path) -> Result<S21Trace> {
    let contents = read_file(path)?;
    let (_, rows) = split_csv(&contents);
    let data = expect_header(path, &rows, &["freq_hz", "re", "im"])?;
    let mut freqs_hz = Vec::with_capacity(data.len());
    let mut s21 = Vec::with_capacity(data.len());
    for (line_no, row) in data {
        expect_cols(path, *line_no, row, 3)?;
        freqs_hz.push(parse_f64(path, *line_no, "freq_hz", &row[0])?);
        s21.push(Complex64::new(
            parse_f64(path, *line_no, "re", &row[1])?,
            parse_f64(path, *line_no, "im", &row[2])?,
        ));
    }
    let trace = S21Trace { freqs_hz, s21 };
    trace.validate()?;
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Stark maps
// ---------------------------------------------------------------------------

/// Stark map as `(power_dbm, qubit_freq_hz, response)` triplets with the
/// cavity–qubit parameters in the comment block.
pub fn write_stark_csv(path: &Path, map: &StarkMap) -> Result<()> {
    map.validate()?;
    let p = &map.params;
    let mut out = String::new();
    let _ = writeln!(out, "# f_res_hz = {}", fmt(p.f_res_hz));
    let _ = writeln!(out, "# q_c = {}", fmt(p.q_c));
    let _ = writeln!(out, "# q_int = {}", fmt(p.q_int));
    let _ = writeln!(out, "# chi_hz = {}", fmt(p.chi_hz));
    let _ = writeln!(out, "# f_q_hz = {}", fmt(p.f_q_hz));
    let _ = writeln!(out, "# qubit_linewidth_hz = {}", fmt(p.qubit_linewidth_hz));
    let _ = writeln!(out, "# asymmetry_rad = {}", fmt(p.asymmetry_rad));
    out.push_str("power_dbm,qubit_freq_hz,response\n");
    for (i, &pw) in map.readout_powers_dbm.iter().enumerate() {
        for (j, &f) in map.qubit_drive_freqs_hz.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt(pw), fmt(f), fmt(map.response[(i, j)]));
        }
    }
    write_file(path, &out)
}

fn param_lookup(path: &Path, params: &[(String, String)], key: &str) -> Result<f64> {
    let raw = params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::data(format!("{}: missing `# {key} = ...` header", path.display())))?;
    raw.parse::<f64>()
        .map_err(|_| Error::data(format!("{}: bad value for header {key}: {raw:?}", path.display())))
}

pub fn read_stark_csv(path: &Path) -> Result<StarkMap> {
    let contents = read_file(path)?;
    let (params, rows) = split_csv(&contents);
    let cq = CavityQubitParams {
        f_res_hz: param_lookup(path, &params, "f_res_hz")?,
        q_c: param_lookup(path, &params, "q_c")?,
        q_int: param_lookup(path, &params, "q_int")?,
        chi_hz: param_lookup(path, &params, "chi_hz")?,
        f_q_hz: param_lookup(path, &params, "f_q_hz")?,
        qubit_linewidth_hz: param_lookup(path, &params, "qubit_linewidth_hz")?,
        asymmetry_rad: param_lookup(path, &params, "asymmetry_rad")?,
    };
    let data = expect_header(path, &rows, &["power_dbm", "qubit_freq_hz", "response"])?;
    // Triplets arrive power-major; rebuild both axes from the first
    // occurrences and check the grid is complete.
    let mut powers: Vec<f64> = Vec::new();
    let mut freqs: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::with_capacity(data.len());
    for (line_no, row) in data {
        expect_cols(path, *line_no, row, 3)?;
        let pw = parse_f64(path, *line_no, "power_dbm", &row[0])?;
        let f = parse_f64(path, *line_no, "qubit_freq_hz", &row[1])?;
        let v = parse_f64(path, *line_no, "response", &row[2])?;
        if powers.last() != Some(&pw) {
            powers.push(pw);
        }
        if powers.len() == 1 {
            freqs.push(f);
        }
        values.push(v);
    }
    if powers.is_empty() || freqs.is_empty() || values.len() != powers.len() * freqs.len() {
        return Err(Error::data(format!(
            "{}: ragged stark grid: {} powers x {} freqs vs {} rows",
            path.display(),
            powers.len(),
            freqs.len(),
            values.len()
        )));
    }
    let response = Array2::from_shape_vec((powers.len(), freqs.len()), values)
        .expect("length checked above");
    let map = StarkMap {
        readout_powers_dbm: powers,
        qubit_drive_freqs_hz: freqs,
        response,
        params: cq,
    };
    map.validate()?;
    Ok(map)
}

// ---------------------------------------------------------------------------
// Spectrum-analyzer traces
// ---------------------------------------------------------------------------

pub fn write_sa_csv(path: &Path, trace: &SaTrace) -> Result<()> {
    trace.validate()?;
    let mut out = String::from("freq_hz,power_dbm\n");
    for (i, &f) in trace.freqs_hz.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt(f), fmt(trace.power_dbm[i]));
    }
    write_file(path, &out)
}

pub fn read_sa_csv(path: &Path) -> Result<SaTrace> {
    let contents = read_file(path)?;
    let (_, rows) = split_csv(&contents);
    let data = expect_header(path, &rows, &["freq_hz", "power_dbm"])?;
    let mut freqs_hz = Vec::with_capacity(data.len());
    let mut power_dbm = Vec::with_capacity(data.len());
    for (line_no, row) in data {
        expect_cols(path, *line_no, row, 2)?;
        freqs_hz.push(parse_f64(path, *line_no, "freq_hz", &row[0])?);
        power_dbm.push(parse_f64(path, *line_no, "power_dbm", &row[1])?);
    }
    let trace = SaTrace { freqs_hz, power_dbm };
    trace.validate()?;
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Traveling-wave line exports
// ---------------------------------------------------------------------------

/// Gain decomposition per frequency; readable back as a [`GainCurve`].
pub fn write_gain_profile_csv(path: &Path, profile: &GainProfile) -> Result<()> {
    let mut out = String::from("freq_hz,on_off_db,loss_db,net_db\n");
    for (i, &f) in profile.freqs_hz.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt(f),
            fmt(profile.gain_on_off_db[i]),
            fmt(profile.insertion_loss_db[i]),
            fmt(profile.net_gain_db[i])
        );
    }
    write_file(path, &out)
}

/// Accepts either the two-column `freq_hz,gain_db` form or the four-column
/// profile export (using its `net_db` column).
pub fn read_gain_curve_csv(path: &Path) -> Result<GainCurve> {
    let contents = read_file(path)?;
    let (_, rows) = split_csv(&contents);
    let Some((line_no, header)) = rows.first() else {
        return Err(Error::data(format!("{}: empty file", path.display())));
    };
    let got: Vec<&str> = header.iter().map(String::as_str).collect();
    let gain_col = match got.as_slice() {
        ["freq_hz", "gain_db"] => 1,
        ["freq_hz", "on_off_db", "loss_db", "net_db"] => 3,
        other => {
            return Err(Error::data(format!(
                "{}:{line_no}: unrecognized gain header {other:?}",
                path.display()
            )))
        }
    };
    let mut points = Vec::new();
    for (line_no, row) in &rows[1..] {
        expect_cols(path, *line_no, row, got.len())?;
        points.push((
            parse_f64(path, *line_no, "freq_hz", &row[0])?,
            parse_f64(path, *line_no, "gain_db", &row[gain_col])?,
        ));
    }
    GainCurve::from_points(points)
}

pub fn write_dispersion_csv(path: &Path, points: &[BlochPoint]) -> Result<()> {
    let mut out = String::from("freq_hz,k_rad_per_m,in_stopband\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt(p.f_hz),
            fmt(p.k_rad_per_m),
            u8::from(p.in_stopband)
        );
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Chain noise and calibration tables
// ---------------------------------------------------------------------------

/// Frequency-resolved system gain and noise for one chain.
pub fn write_system_noise_csv(path: &Path, rows: &[SystemNoiseResult]) -> Result<()> {
    let mut out = String::from(
        "freq_hz,g_sys_db,g_sys_sigma_db,t_n_k,t_n_sigma_k,n_added,n_added_sigma\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(r.f_hz),
            fmt(r.g_sys_db),
            fmt(r.g_sys_sigma_db),
            fmt(r.t_n_k),
            fmt(r.t_n_sigma_k),
            fmt(r.n_added),
            fmt(r.n_added_sigma)
        );
    }
    write_file(path, &out)
}

/// One summary row per calibrated qubit.
pub fn write_calibration_csv(path: &Path, rows: &[&QubitCalibration]) -> Result<()> {
    let mut out = String::from(
        "label,f_res_hz,q,q_c,chi_hz,chi_sigma_hz,attenuation_db,attenuation_sigma_db,\
         g_sys_db,g_sys_sigma_db,n_added,n_added_sigma,t_n_k\n",
    );
    for c in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.label,
            fmt(c.fit_state0.f_res_hz),
            fmt(c.fit_state0.q),
            fmt(c.fit_state0.q_c),
            fmt(c.chi_hz),
            fmt(c.chi_sigma_hz),
            fmt(c.stark.attenuation_db),
            fmt(c.stark.uncertainty_db),
            fmt(c.gain.g_sys_db),
            fmt(c.gain.g_sys_sigma_db),
            fmt(c.added.n_added),
            fmt(c.added.sigma),
            fmt(c.added.t_n_k)
        );
    }
    write_file(path, &out)
}

/// Side-by-side noise tables for two chains plus the `sqrt(T_N,a/T_N,b)`
/// column that predicts their SNR ratio.
pub fn write_comparison_csv(path: &Path, cmp: &ChainComparison) -> Result<()> {
    let mut out = String::from(
        "freq_hz,g_sys_a_db,t_n_a_k,n_added_a,g_sys_b_db,t_n_b_k,n_added_b,tn_sqrt_ratio\n",
    );
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt(r.f_hz),
            fmt(r.a.g_sys_db),
            fmt(r.a.t_n_k),
            fmt(r.a.n_added),
            fmt(r.b.g_sys_db),
            fmt(r.b.t_n_k),
            fmt(r.b.n_added),
            fmt(r.tn_sqrt_ratio)
        );
    }
    write_file(path, &out)
}

/// One row per qubit label shared by two calibration runs.
pub fn write_paired_noise_csv(path: &Path, rows: &[PairedNoise]) -> Result<()> {
    let mut out =
        String::from("label,n_added_a,n_added_b,t_n_ratio,predicted_snr_ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.label,
            fmt(r.n_added_a),
            fmt(r.n_added_b),
            fmt(r.t_n_ratio),
            fmt(r.predicted_snr_ratio)
        );
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Shot ensembles and histograms
// ---------------------------------------------------------------------------

pub fn write_shots_csv(path: &Path, e: &ShotEnsemble) -> Result<()> {
    e.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "# integration_time_s = {}", fmt(e.integration_time_s));
    let _ = writeln!(out, "# readout_freq_hz = {}", fmt(e.readout_freq_hz));
    let _ = writeln!(out, "# seed = {}", e.seed);
    out.push_str("i,q,prepared_state\n");
    for s in &e.shots {
        let _ = writeln!(out, "{},{},{}", fmt(s.i), fmt(s.q), s.prepared.index());
    }
    write_file(path, &out)
}

pub fn read_shots_csv(path: &Path) -> Result<ShotEnsemble> {
    let contents = read_file(path)?;
    let (params, rows) = split_csv(&contents);
    let integration_time_s = param_lookup(path, &params, "integration_time_s")?;
    let readout_freq_hz = param_lookup(path, &params, "readout_freq_hz")?;
    let seed = param_lookup(path, &params, "seed")? as u64;
    let data = expect_header(path, &rows, &["i", "q", "prepared_state"])?;
    let mut shots = Vec::with_capacity(data.len());
    for (line_no, row) in data {
        expect_cols(path, *line_no, row, 3)?;
        let state_raw = row[2].trim();
        let idx: usize = state_raw.parse().map_err(|_| {
            Error::data(format!(
                "{}:{line_no}: bad prepared_state value {state_raw:?}",
                path.display()
            ))
        })?;
        shots.push(Shot {
            i: parse_f64(path, *line_no, "i", &row[0])?,
            q: parse_f64(path, *line_no, "q", &row[1])?,
            prepared: QubitState::from_index(idx)
                .map_err(|e| Error::data(format!("{}:{line_no}: {e}", path.display())))?,
        });
    }
    let e = ShotEnsemble { shots, integration_time_s, readout_freq_hz, seed };
    e.validate()?;
    Ok(e)
}

pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut out = String::from("bin_center,count_state0,count_state1\n");
    for (i, &c) in h.bin_centers.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt(c), h.count_state0[i], h.count_state1[i]);
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calfit::synth_s21_trace;
    use crate::cqed::{synth_stark_map, StarkSynthOptions};
    use crate::rfchain::SystemNoiseResult;
    use crate::shots::{simulate_shots, ShotOptions};
    use tempfile::tempdir;

    fn qubit1() -> CavityQubitParams {
        CavityQubitParams {
            f_res_hz: 7.218e9,
            q_c: 7136.0,
            q_int: f64::INFINITY,
            chi_hz: 135e3,
            f_q_hz: 4.730e9,
            qubit_linewidth_hz: 300e3,
            asymmetry_rad: 0.0,
        }
    }

    #[test]
    fn s21_roundtrip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s21.csv");
        let p = qubit1();
        let freqs: Vec<f64> = (0..120).map(|i| p.f_res_hz - 5e6 + i as f64 * 1e5).collect();
        let trace = synth_s21_trace(&p, QubitState::Ground, &freqs, 0.01, 3).unwrap();
        write_s21_csv(&path, &trace).unwrap();
        let back = read_s21_csv(&path).unwrap();
        assert_eq!(trace, back, "17-digit formatting must round-trip exactly");
    }

    #[test]
    fn stark_roundtrip_preserves_params_and_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stark.csv");
        let p = qubit1();
        let freqs: Vec<f64> = (0..40).map(|i| p.f_q_hz - 2e6 + i as f64 * 1e5).collect();
        let powers: Vec<f64> = (0..4).map(|i| -255.0 + i as f64 * 2.0).collect();
        let map =
            synth_stark_map(&p, -110.0, &powers, &freqs, 0.01, &StarkSynthOptions::default())
                .unwrap();
        write_stark_csv(&path, &map).unwrap();
        let back = read_stark_csv(&path).unwrap();
        assert_eq!(map, back);
        // Infinite q_int survives the text format.
        assert!(back.params.q_int.is_infinite());
    }

    #[test]
    fn sa_roundtrip_and_gain_curve_forms() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("sa.csv");
        let trace = SaTrace {
            freqs_hz: vec![6.0e9, 6.1e9, 6.2e9],
            power_dbm: vec![-80.0, -45.5, -80.25],
        };
        write_sa_csv(&p, &trace).unwrap();
        assert_eq!(read_sa_csv(&p).unwrap(), trace);

        // Two-column gain curve.
        let g2 = dir.path().join("gain2.csv");
        std::fs::write(&g2, "freq_hz,gain_db\n4e9,10.5\n8e9,9.0\n").unwrap();
        let curve = read_gain_curve_csv(&g2).unwrap();
        assert_eq!(curve.gain_db(4e9), 10.5);
        // Four-column profile uses net_db.
        let g4 = dir.path().join("gain4.csv");
        std::fs::write(
            &g4,
            "freq_hz,on_off_db,loss_db,net_db\n4e9,12.0,3.0,9.0\n8e9,12.0,6.0,6.0\n",
        )
        .unwrap();
        let curve = read_gain_curve_csv(&g4).unwrap();
        assert_eq!(curve.gain_db(8e9), 6.0);
    }

    #[test]
    fn shots_roundtrip_preserves_everything() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("shots.csv");
        let chain = SystemNoiseResult::from_added_quanta(7.218e9, 95.0, 2.0).unwrap();
        let e = simulate_shots(&qubit1(), &chain, 100, 1e-6, &ShotOptions::default()).unwrap();
        write_shots_csv(&path, &e).unwrap();
        let back = read_shots_csv(&path).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn corrupt_files_name_file_and_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("broken.csv");
        std::fs::write(&path, "freq_hz,re,im\n1e9,0.5,0.1\n2e9,oops,0.2\n").unwrap();
        let err = read_s21_csv(&path).unwrap_err().to_string();
        assert!(err.contains("broken.csv"), "error should name the file: {err}");
        assert!(err.contains(":3"), "error should name the line: {err}");
        assert!(err.contains("re"), "error should name the column: {err}");

        // Wrong header.
        std::fs::write(&path, "frequency,re,im\n1e9,0.5,0.1\n").unwrap();
        let err = read_s21_csv(&path).unwrap_err().to_string();
        assert!(err.contains("expected header"));

        // Wrong column count.
        std::fs::write(&path, "freq_hz,re,im\n1e9,0.5\n").unwrap();
        let err = read_s21_csv(&path).unwrap_err().to_string();
        assert!(err.contains("columns"));

        // Missing file.
        let err = read_s21_csv(&dir.path().join("absent.csv")).unwrap_err().to_string();
        assert!(err.contains("absent.csv"));
    }

    #[test]
    fn stark_reader_rejects_ragged_grids() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        let mut body = String::new();
        for k in [
            "f_res_hz = 7.218e9",
            "q_c = 7136",
            "q_int = inf",
            "chi_hz = 135e3",
            "f_q_hz = 4.73e9",
            "qubit_linewidth_hz = 3e5",
            "asymmetry_rad = 0",
        ] {
            body.push_str("# ");
            body.push_str(k);
            body.push('\n');
        }
        body.push_str("power_dbm,qubit_freq_hz,response\n");
        body.push_str("-250,4.729e9,0.5\n-250,4.730e9,0.9\n-248,4.729e9,0.4\n");
        std::fs::write(&path, &body).unwrap();
        let err = read_stark_csv(&path).unwrap_err().to_string();
        assert!(err.contains("ragged"), "got: {err}");
    }
}
