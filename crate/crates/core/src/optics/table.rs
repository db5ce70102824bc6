use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tracer::{trace_diffuse_bands, trace_direct, TraceConfig};
use super::{LpGeometry, BAND_EDGES};
use crate::error::{Error, Result};

/// Altitudes sampled for the direct curve, degrees.
pub const DIRECT_ALTITUDES: [f64; 18] = [
    5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0,
    85.0, 90.0,
];
/// Mirror tilts sampled for the diffuse bands, degrees.
pub const DIFFUSE_TILTS: [f64; 10] = [45.0, 50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0, 85.0, 90.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Traced,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectSample {
    pub altitude_deg: f64,
    /// Share landing in the pipe's own target zone.
    pub eta: f64,
    pub stderr: f64,
    /// Share entering the chamber below the diffuser.
    pub eta_chamber: f64,
    pub stderr_chamber: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BandEfficiency {
    pub eta_th: f64,
    pub eta_crop: f64,
    pub stderr_th: f64,
    pub stderr_crop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffuseRow {
    pub tilt_deg: f64,
    /// One entry per band in `BAND_EDGES` order.
    pub bands: [BandEfficiency; 9],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalEfficiencyTable {
    pub direct: Vec<DirectSample>,
    pub diffuse: Vec<DiffuseRow>,
    pub source: TableSource,
    pub geometry_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    source: TableSource,
    geometry_hash: String,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Index `i` and weight `t` such that `x` lies between `xs[i]` and
/// `xs[i + 1]`; the flag is set when `x` had to be clamped.
fn bracket(xs: &[f64], x: f64) -> (usize, f64, bool) {
    let last = xs.len() - 1;
    if xs.len() == 1 || x <= xs[0] {
        return (0, 0.0, x < xs[0]);
    }
    if x >= xs[last] {
        return (last - 1, 1.0, x > xs[last]);
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    (i, (x - xs[i]) / (xs[i + 1] - xs[i]), false)
}

impl OpticalEfficiencyTable {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Table(m));
        if self.direct.is_empty() || self.diffuse.is_empty() {
            return err("efficiency table is empty".into());
        }
        for w in self.direct.windows(2) {
            if w[1].altitude_deg <= w[0].altitude_deg {
                return err("direct altitudes must increase".into());
            }
        }
        for w in self.diffuse.windows(2) {
            if w[1].tilt_deg <= w[0].tilt_deg {
                return err("diffuse tilts must increase".into());
            }
        }
        for s in &self.direct {
            if !(0.0..=1.0).contains(&s.eta) || !(0.0..=1.0).contains(&s.eta_chamber) {
                return err(format!(
                    "direct efficiency at {}° outside [0, 1]",
                    s.altitude_deg
                ));
            }
            if s.eta > s.eta_chamber + 1e-12 {
                return err(format!(
                    "direct target efficiency exceeds chamber efficiency at {}°",
                    s.altitude_deg
                ));
            }
        }
        for row in &self.diffuse {
            for (edge, b) in BAND_EDGES.iter().zip(&row.bands) {
                if !(0.0..=1.0).contains(&b.eta_th) || !(0.0..=1.0).contains(&b.eta_crop) {
                    return err(format!(
                        "band {edge}° at tilt {}° outside [0, 1]",
                        row.tilt_deg
                    ));
                }
                if b.eta_crop > b.eta_th {
                    return err(format!(
                        "band {edge}° at tilt {}°: crop efficiency exceeds chamber efficiency",
                        row.tilt_deg
                    ));
                }
            }
        }
        Ok(())
    }

    fn interp_direct(&self, alt_deg: f64, f: impl Fn(&DirectSample) -> f64) -> (f64, bool) {
        let xs: Vec<f64> = self.direct.iter().map(|s| s.altitude_deg).collect();
        let (i, t, clamped) = bracket(&xs, alt_deg);
        if self.direct.len() == 1 {
            return (f(&self.direct[0]), clamped);
        }
        (lerp(f(&self.direct[i]), f(&self.direct[i + 1]), t), clamped)
    }

    /// Target-zone efficiency, linear in altitude; the nearest sample is
    /// used outside the sampled range, with the flag set.
    pub fn direct_efficiency(&self, alt_deg: f64) -> (f64, bool) {
        self.interp_direct(alt_deg, |s| s.eta)
    }

    /// Chamber-entry efficiency, interpolated like `direct_efficiency`.
    pub fn direct_chamber_efficiency(&self, alt_deg: f64) -> (f64, bool) {
        self.interp_direct(alt_deg, |s| s.eta_chamber)
    }

    pub fn diffuse_efficiency(&self, tilt_deg: f64) -> ([BandEfficiency; 9], bool) {
        let xs: Vec<f64> = self.diffuse.iter().map(|r| r.tilt_deg).collect();
        let (i, t, clamped) = bracket(&xs, tilt_deg);
        if self.diffuse.len() == 1 {
            return (self.diffuse[0].bands, clamped);
        }
        let (a, b) = (&self.diffuse[i].bands, &self.diffuse[i + 1].bands);
        let mut out = [BandEfficiency::default(); 9];
        for k in 0..9 {
            out[k] = BandEfficiency {
                eta_th: lerp(a[k].eta_th, b[k].eta_th, t),
                eta_crop: lerp(a[k].eta_crop, b[k].eta_crop, t),
                stderr_th: lerp(a[k].stderr_th, b[k].stderr_th, t),
                stderr_crop: lerp(a[k].stderr_crop, b[k].stderr_crop, t),
            };
        }
        (out, clamped)
    }

    /// Writes `direct.csv`, `diffuse.csv` and `meta.json` into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_err = |p: &Path| {
            let p = p.to_path_buf();
            move |e: csv::Error| Error::Table(format!("{}: {e}", p.display()))
        };

        let p = dir.join("direct.csv");
        let mut w = csv::Writer::from_path(&p).map_err(csv_err(&p))?;
        w.write_record([
            "altitude_deg",
            "eta_dir",
            "stderr",
            "eta_chamber",
            "stderr_chamber",
        ])
        .map_err(csv_err(&p))?;
        for s in &self.direct {
            w.write_record(
                [
                    s.altitude_deg,
                    s.eta,
                    s.stderr,
                    s.eta_chamber,
                    s.stderr_chamber,
                ]
                .map(|v| v.to_string()),
            )
            .map_err(csv_err(&p))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;

        let p = dir.join("diffuse.csv");
        let mut w = csv::Writer::from_path(&p).map_err(csv_err(&p))?;
        w.write_record([
            "tilt_deg",
            "band_deg",
            "eta_th",
            "eta_crop",
            "stderr_th",
            "stderr_crop",
        ])
        .map_err(csv_err(&p))?;
        for row in &self.diffuse {
            for (edge, b) in BAND_EDGES.iter().zip(&row.bands) {
                w.write_record(
                    [
                        row.tilt_deg,
                        *edge,
                        b.eta_th,
                        b.eta_crop,
                        b.stderr_th,
                        b.stderr_crop,
                    ]
                    .map(|v| v.to_string()),
                )
                .map_err(csv_err(&p))?;
            }
        }
        w.flush().map_err(|e| Error::io(&p, e))?;

        let p = dir.join("meta.json");
        let meta = Meta {
            source: self.source,
            geometry_hash: self.geometry_hash.clone(),
        };
        std::fs::write(
            &p,
            serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )
        .map_err(|e| Error::io(&p, e))
    }

    /// Reads a table directory written by `export` or assembled by hand.
    /// The result is tagged as imported unless the metadata says otherwise.
    pub fn import(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<(PathBuf, csv::Reader<std::fs::File>)> {
            let p = dir.join(name);
            let r = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(&p)
                .map_err(|e| Error::Table(format!("{}: {e}", p.display())))?;
            Ok((p, r))
        };
        let parse_rows = |p: &Path, r: &mut csv::Reader<std::fs::File>, width: usize| {
            let mut rows = Vec::new();
            for (i, rec) in r.records().enumerate() {
                let rec = rec.map_err(|e| Error::Table(format!("{}: {e}", p.display())))?;
                let vals: std::result::Result<Vec<f64>, _> =
                    rec.iter().take(width).map(str::parse::<f64>).collect();
                match vals {
                    Ok(v) if v.len() == width => rows.push(v),
                    _ => {
                        return Err(Error::Table(format!(
                            "{} row {}: expected {width} numeric fields",
                            p.display(),
                            i + 1
                        )))
                    }
                }
            }
            Ok(rows)
        };

        let (p, mut r) = read("direct.csv")?;
        let direct = parse_rows(&p, &mut r, 5)?
            .into_iter()
            .map(|v| DirectSample {
                altitude_deg: v[0],
                eta: v[1],
                stderr: v[2],
                eta_chamber: v[3],
                stderr_chamber: v[4],
            })
            .collect();

        let (p, mut r) = read("diffuse.csv")?;
        let mut diffuse: Vec<DiffuseRow> = Vec::new();
        for v in parse_rows(&p, &mut r, 6)? {
            let k = BAND_EDGES
                .iter()
                .position(|e| (e - v[1]).abs() < 1e-9)
                .ok_or_else(|| Error::Table(format!("unknown band edge {}", v[1])))?;
            let band = BandEfficiency {
                eta_th: v[2],
                eta_crop: v[3],
                stderr_th: v[4],
                stderr_crop: v[5],
            };
            match diffuse.iter_mut().find(|row| row.tilt_deg == v[0]) {
                Some(row) => row.bands[k] = band,
                None => {
                    let mut bands = [BandEfficiency {
                        eta_th: f64::NAN,
                        ..Default::default()
                    }; 9];
                    bands[k] = band;
                    diffuse.push(DiffuseRow {
                        tilt_deg: v[0],
                        bands,
                    });
                }
            }
        }
        if let Some(row) = diffuse
            .iter()
            .find(|row| row.bands.iter().any(|b| b.eta_th.is_nan()))
        {
            return Err(Error::Table(format!(
                "tilt {}° is missing one or more bands",
                row.tilt_deg
            )));
        }
        diffuse.sort_by(|a, b| a.tilt_deg.total_cmp(&b.tilt_deg));

        let meta_path = dir.join("meta.json");
        let (source, geometry_hash) = match std::fs::read(&meta_path) {
            Ok(bytes) => {
                let m: Meta = serde_json::from_slice(&bytes)
                    .map_err(|e| Error::Table(format!("{}: {e}", meta_path.display())))?;
                (m.source, m.geometry_hash)
            }
            Err(_) => (TableSource::Imported, String::new()),
        };
        let table = OpticalEfficiencyTable {
            direct,
            diffuse,
            source,
            geometry_hash,
        };
        table.validate()?;
        Ok(table)
    }
}

/// Traces the full altitude sweep and every tilt row.
pub fn build_table(geom: &LpGeometry, cfg: &TraceConfig) -> Result<OpticalEfficiencyTable> {
    let direct = DIRECT_ALTITUDES
        .iter()
        .map(|&a| {
            let t = trace_direct(geom, a, cfg)?;
            Ok(DirectSample {
                altitude_deg: a,
                eta: t.eta,
                stderr: t.stderr,
                eta_chamber: t.tally.eta_chamber(),
                stderr_chamber: t.tally.stderr_chamber(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let diffuse = DIFFUSE_TILTS
        .iter()
        .map(|&tilt| {
            let traces = trace_diffuse_bands(geom, tilt, cfg)?;
            let mut bands = [BandEfficiency::default(); 9];
            for (b, t) in bands.iter_mut().zip(traces) {
                *b = BandEfficiency {
                    eta_th: t.eta_th,
                    eta_crop: t.eta_crop,
                    stderr_th: t.stderr_th,
                    stderr_crop: t.stderr_crop,
                };
            }
            Ok(DiffuseRow {
                tilt_deg: tilt,
                bands,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = OpticalEfficiencyTable {
        direct,
        diffuse,
        source: TableSource::Traced,
        geometry_hash: cache_key(geom, cfg),
    };
    table.validate()?;
    Ok(table)
}

/// Hash of everything that changes a traced table. The worker count is
/// left out because it does not affect results.
pub fn cache_key(geom: &LpGeometry, cfg: &TraceConfig) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(geom.hash().as_bytes());
    h.update(cfg.rays.to_le_bytes());
    h.update(cfg.seed.to_le_bytes());
    h.update(cfg.bounce_cap.to_le_bytes());
    h.update(cfg.chunk_size.to_le_bytes());
    hex::encode(h.finalize())
}

/// Returns the cached table for this geometry and tracer setup, tracing
/// and storing it on a miss.
pub fn load_or_build_table(
    cache_dir: &Path,
    geom: &LpGeometry,
    cfg: &TraceConfig,
) -> Result<OpticalEfficiencyTable> {
    let key = cache_key(geom, cfg);
    let dir = cache_dir.join(&key[..16]);
    if dir.join("meta.json").exists() {
        if let Ok(t) = OpticalEfficiencyTable::import(&dir) {
            if t.geometry_hash == key {
                return Ok(t);
            }
        }
        log::warn!("optics cache at {} is stale; retracing", dir.display());
    }
    let table = build_table(geom, cfg)?;
    table.export(&dir)?;
    Ok(table)
}
