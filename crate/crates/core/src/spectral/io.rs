use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::cwt::{Scalogram, WaveletDescriptor, MORLET_OMEGA0};
use super::welch::Spectrum;

const GRID_MAGIC: &str = "URBMAG-GRID 1";

/// Writes `freq_hz,psd` rows with a header line.
pub fn write_spectrum_csv(spec: &Spectrum, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "freq_hz,psd_ut2_per_hz")?;
        for (f, p) in spec.freqs_hz.iter().zip(&spec.psd) {
            writeln!(w, "{f:.9e},{p:.9e}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Grid container: text header ending in `END`, then little-endian f64
/// row axis, column axis and the row-major matrix.
pub fn write_scalogram(sc: &Scalogram, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "{GRID_MAGIC}")?;
        writeln!(w, "rows={}", sc.rows())?;
        writeln!(w, "cols={}", sc.cols())?;
        writeln!(w, "dtype=float64-le")?;
        writeln!(w, "row_axis=freq_hz")?;
        writeln!(w, "col_axis=epoch_s")?;
        writeln!(w, "values=power_ut2_per_hz")?;
        writeln!(w, "wavelet={}", sc.wavelet.family)?;
        writeln!(w, "omega0={}", sc.wavelet.omega0)?;
        writeln!(w, "voices_per_octave={}", sc.wavelet.voices_per_octave)?;
        writeln!(w, "layout=row_axis,col_axis,coi_s,matrix")?;
        writeln!(w, "END")?;
        for v in sc.freqs_hz.iter().chain(&sc.times).chain(&sc.coi_s).chain(&sc.power) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn read_scalogram(path: &Path) -> Result<Scalogram> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut line = String::new();
    let (mut rows, mut cols, mut voices, mut omega0) = (None, None, 12, MORLET_OMEGA0);
    let mut first = true;
    loop {
        line.clear();
        if r.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            return Err(Error::format(path, "grid header has no END line"));
        }
        let l = line.trim_end();
        if first {
            if l != GRID_MAGIC {
                return Err(Error::format(path, "not a grid container"));
            }
            first = false;
            continue;
        }
        if l == "END" {
            break;
        }
        if let Some((k, v)) = l.split_once('=') {
            let num = || v.parse::<usize>().map_err(|_| Error::format(path, format!("bad {k}")));
            match k {
                "rows" => rows = Some(num()?),
                "cols" => cols = Some(num()?),
                "voices_per_octave" => voices = num()?,
                "omega0" => {
                    omega0 = v.parse().map_err(|_| Error::format(path, "bad omega0"))?;
                }
                _ => {}
            }
        }
    }
    let (rows, cols) = match (rows, cols) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::format(path, "grid header lacks rows/cols")),
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let expected = (2 * rows + cols + rows * cols) * 8;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("grid body has {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let (freqs, rest) = vals.split_at(rows);
    let (times, rest) = rest.split_at(cols);
    let (coi, power) = rest.split_at(rows);
    Ok(Scalogram {
        freqs_hz: freqs.to_vec(),
        times: times.to_vec(),
        power: power.to_vec(),
        coi_s: coi.to_vec(),
        wavelet: WaveletDescriptor {
            family: "morlet",
            omega0,
            voices_per_octave: voices,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeSeries;
    use crate::spectral::{cwt_scalogram, psd_welch, Taper};

    #[test]
    fn grid_round_trip() {
        let v: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.3).sin()).collect();
        let s = TimeSeries::new(100.0, 2.0, v, "s").unwrap();
        let sc = cwt_scalogram(&s, 0.01, 1.0, 6, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.grid");
        write_scalogram(&sc, &p).unwrap();
        assert_eq!(read_scalogram(&p).unwrap(), sc);
    }

    #[test]
    fn spectrum_csv_has_header() {
        let s = TimeSeries::new(0.0, 10.0, (0..256).map(|i| i as f64).collect(), "s").unwrap();
        let spec = psd_welch(&s, 64, 0.5, Taper::Hann).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        write_spectrum_csv(&spec, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("freq_hz,psd_ut2_per_hz"));
        assert_eq!(lines.count(), 32);
    }
}
