//! Monte Carlo tracer for one light pipe.
//!
//! Frame: z up, aperture disc at z = 0 centred on the pipe axis, pipe
//! running down to z = −L, diffuser sheet at the outlet and the canopy a
//! further `canopy_distance` below. The dome turns with the sun, so the
//! beam always arrives from +x. The mirror is a flat disc hinged on the
//! aperture plane at the anti-sun rim, rising toward the sun at the tilt
//! angle, with its reflective face looking down toward the sun.
//!
//! The collector admits two streams: rays that cross the horizontal
//! aperture directly and rays that strike the mirror face (which would
//! otherwise have passed beside the pipe). Launches are split between the
//! two in proportion to their projected areas, and efficiencies are ratios
//! to the admitted power. Every ray carries a weight that is debited at each
//! lossy interaction into a named bin, so the tally closes exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mirror_tilt, FluxMap, LpGeometry, BAND_EDGES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub rays: usize,
    pub seed: u64,
    /// 0 uses the global rayon pool.
    pub workers: usize,
    pub bounce_cap: u32,
    pub chunk_size: usize,
    pub flux_pitch_m: f64,
    pub flux_half_extent_m: f64,
    /// DNI used to scale flux maps to W m⁻².
    pub reference_irradiance: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            rays: 100_000,
            seed: 20_240_601,
            workers: 0,
            bounce_cap: 50,
            chunk_size: 4096,
            flux_pitch_m: 0.01,
            flux_half_extent_m: 0.30,
            reference_irradiance: 833.0,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rays < 10_000 {
            return Err(Error::config(format!(
                "ray count {} below the 10000 minimum",
                self.rays
            )));
        }
        if self.chunk_size == 0 || self.bounce_cap == 0 {
            return Err(Error::config("chunk size and bounce cap must be positive"));
        }
        if !(self.flux_pitch_m > 0.0 && self.flux_half_extent_m > self.flux_pitch_m) {
            return Err(Error::config("flux map pitch/extent invalid"));
        }
        Ok(())
    }

    fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        if self.workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}

/// Running sums for a weighted ratio estimator `Σx / Σw`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct RatioSums {
    x: f64,
    xx: f64,
    xw: f64,
}

/// Fate of admitted power. Each launch carries weight `w`; all bins are in
/// the same weight units and sum to `incident`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceTally {
    pub rays: u64,
    pub incident: f64,
    pub target: f64,
    /// Entered the chamber but missed the target zone.
    pub chamber_outside: f64,
    pub absorbed_dome: f64,
    pub absorbed_mirror: f64,
    pub absorbed_walls: f64,
    pub absorbed_diffuser: f64,
    /// Left the system: mirror reflections missing the aperture and total
    /// internal reflection at the diffuser.
    pub escaped: f64,
    /// Killed at the bounce cap; counted as absorbed.
    pub bounce_capped: f64,
    /// Admitted weight launched on the mirror face.
    pub mirror_stream: f64,
    /// Admitted weight launched through the aperture.
    pub aperture_stream: f64,
    ww: f64,
    target_sums: RatioSums,
    chamber_sums: RatioSums,
}

impl TraceTally {
    fn merge(&mut self, o: &TraceTally) {
        self.rays += o.rays;
        self.incident += o.incident;
        self.target += o.target;
        self.chamber_outside += o.chamber_outside;
        self.absorbed_dome += o.absorbed_dome;
        self.absorbed_mirror += o.absorbed_mirror;
        self.absorbed_walls += o.absorbed_walls;
        self.absorbed_diffuser += o.absorbed_diffuser;
        self.escaped += o.escaped;
        self.bounce_capped += o.bounce_capped;
        self.mirror_stream += o.mirror_stream;
        self.aperture_stream += o.aperture_stream;
        self.ww += o.ww;
        for (a, b) in [
            (&mut self.target_sums, &o.target_sums),
            (&mut self.chamber_sums, &o.chamber_sums),
        ] {
            a.x += b.x;
            a.xx += b.xx;
            a.xw += b.xw;
        }
    }

    pub fn accounted(&self) -> f64 {
        self.target
            + self.chamber_outside
            + self.absorbed_dome
            + self.absorbed_mirror
            + self.absorbed_walls
            + self.absorbed_diffuser
            + self.escaped
            + self.bounce_capped
    }

    /// Fraction of admitted power reaching the target zone.
    pub fn eta_target(&self) -> f64 {
        self.target / self.incident
    }

    /// Fraction of admitted power entering the chamber.
    pub fn eta_chamber(&self) -> f64 {
        (self.target + self.chamber_outside) / self.incident
    }

    pub fn stderr_target(&self) -> f64 {
        self.ratio_stderr(&self.target_sums)
    }

    pub fn stderr_chamber(&self) -> f64 {
        self.ratio_stderr(&self.chamber_sums)
    }

    /// Delta-method standard error of `Σx / Σw`.
    fn ratio_stderr(&self, s: &RatioSums) -> f64 {
        if self.rays < 2 || self.incident <= 0.0 {
            return 0.0;
        }
        let eta = s.x / self.incident;
        let resid = s.xx - 2.0 * eta * s.xw + eta * eta * self.ww;
        let n = self.rays as f64;
        (resid.max(0.0) * n / (n - 1.0)).sqrt() / self.incident
    }

    /// Mirror stream relative to the direct aperture stream; exceeds one
    /// when the mirror's projected area beats the horizontal aperture's.
    pub fn mirror_interception(&self) -> f64 {
        if self.aperture_stream > 0.0 {
            self.mirror_stream / self.aperture_stream
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct V3 {
    x: f64,
    y: f64,
    z: f64,
}

impl V3 {
    const fn new(x: f64, y: f64, z: f64) -> Self {
        V3 { x, y, z }
    }
    fn dot(self, o: V3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    fn scale(self, k: f64) -> V3 {
        V3::new(self.x * k, self.y * k, self.z * k)
    }
    fn add(self, o: V3) -> V3 {
        V3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
    fn sub(self, o: V3) -> V3 {
        V3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
    fn normalized(self) -> V3 {
        self.scale(1.0 / self.dot(self).sqrt())
    }
    fn reflect(self, n: V3) -> V3 {
        self.sub(n.scale(2.0 * self.dot(n)))
    }
}

/// Refraction of unit direction `d` through a surface whose unit normal `n`
/// faces the incident side; `ratio` is n_incident / n_transmitted. `None`
/// on total internal reflection.
fn refract(d: V3, n: V3, ratio: f64) -> Option<V3> {
    let cos_i = -d.dot(n);
    let k = 1.0 - ratio * ratio * (1.0 - cos_i * cos_i);
    if k < 0.0 {
        return None;
    }
    Some(
        d.scale(ratio)
            .add(n.scale(ratio * cos_i - k.sqrt()))
            .normalized(),
    )
}

/// Geometry resolved to metres and unit vectors for one mirror tilt.
struct Scene {
    r: f64,
    length: f64,
    mirror: Option<Mirror>,
    tau_dome: f64,
    rho_wall: f64,
    diffuser: Option<Diffuser>,
    z_canopy: f64,
    half_w: f64,
    half_d: f64,
    bounce_cap: u32,
}

struct Mirror {
    hinge: V3,
    normal: V3,
    along: V3,
    radius: f64,
    rho: f64,
    /// Mirror area over aperture area.
    area_ratio: f64,
}

impl Mirror {
    fn contains(&self, p: V3) -> bool {
        let v = p.sub(self.hinge);
        let su = v.dot(self.along) - self.radius;
        su * su + v.y * v.y <= self.radius * self.radius
    }

    /// Projected area of the reflective face seen along `d`, relative to
    /// the aperture area.
    fn projected(&self, d: V3) -> f64 {
        (-d.dot(self.normal)).max(0.0) * self.area_ratio
    }
}

struct Diffuser {
    pitch: f64,
    sin_s: f64,
    cos_s: f64,
    index: f64,
    throughput: f64,
}

enum Source {
    Aperture,
    Mirror,
}

struct Launch {
    dir: V3,
    source: Source,
    weight: f64,
}

impl Scene {
    fn new(geom: &LpGeometry, tilt_deg: f64, bounce_cap: u32) -> Scene {
        let r = geom.pipe_diameter_mm / 2000.0;
        let length = geom.pipe_length_mm / 1000.0;
        let (st, ct) = tilt_deg.to_radians().sin_cos();
        let mirror = geom.mirror_enabled.then(|| {
            let radius = geom.mirror_diameter_mm / 2000.0;
            Mirror {
                hinge: V3::new(geom.mirror_hinge_x_mm / 1000.0, 0.0, 0.0),
                normal: V3::new(st, 0.0, -ct),
                along: V3::new(ct, 0.0, st),
                radius,
                rho: geom.mirror_reflectance,
                area_ratio: (radius / r).powi(2),
            }
        });
        let (sin_s, cos_s) = geom.facet_slope_deg().to_radians().sin_cos();
        let diffuser = geom.diffuser_enabled.then(|| Diffuser {
            pitch: geom.prism_pitch_mm / 1000.0,
            sin_s,
            cos_s,
            index: geom.refractive_index,
            throughput: geom.diffuser_throughput,
        });
        Scene {
            r,
            length,
            mirror,
            tau_dome: geom.dome_transmittance,
            rho_wall: geom.wall_reflectance,
            diffuser,
            z_canopy: -length - geom.canopy_distance_m,
            half_w: geom.target_width_m / 2.0,
            half_d: geom.target_depth_m / 2.0,
            bounce_cap,
        }
    }

    /// Picks the stream for direction `d` in proportion to projected area.
    /// `aperture_proj` is the aperture's projected area factor (sin α).
    fn launch(&self, rng: &mut ChaCha8Rng, d: V3, aperture_proj: f64, weight: f64) -> Launch {
        let mirror_proj = self.mirror.as_ref().map_or(0.0, |m| m.projected(d));
        let total = aperture_proj + mirror_proj;
        let source = if rng.random::<f64>() * total < aperture_proj {
            Source::Aperture
        } else {
            Source::Mirror
        };
        Launch {
            dir: d,
            source,
            weight: weight * total,
        }
    }

    /// Follows one launch and returns the canopy landing point and the
    /// surviving weight if it enters the chamber.
    fn trace(
        &self,
        rng: &mut ChaCha8Rng,
        launch: &Launch,
        t: &mut TraceTally,
    ) -> Option<(f64, f64, f64)> {
        let d = launch.dir;
        let mut w = launch.weight;
        t.rays += 1;
        t.incident += w;
        t.ww += w * w;
        t.absorbed_dome += w * (1.0 - self.tau_dome);
        w *= self.tau_dome;

        let (mut pos, mut dir) = match launch.source {
            Source::Aperture => {
                t.aperture_stream += launch.weight;
                let p = sample_disc(rng, self.r);
                if let Some(m) = &self.mirror {
                    // Rays reaching the aperture from behind the mirror
                    // plane are stopped by its back.
                    let denom = d.dot(m.normal);
                    if denom > 1e-15 {
                        let s = m.hinge.sub(p).dot(m.normal) / denom;
                        if s < 0.0 && m.contains(p.add(d.scale(s))) {
                            t.absorbed_mirror += w;
                            return None;
                        }
                    }
                }
                (p, d)
            }
            Source::Mirror => {
                t.mirror_stream += launch.weight;
                let m = self.mirror.as_ref().expect("mirror stream needs a mirror");
                let q = sample_disc(rng, m.radius);
                let x = m
                    .hinge
                    .add(m.along.scale(m.radius + q.x))
                    .add(V3::new(0.0, q.y, 0.0));
                t.absorbed_mirror += w * (1.0 - m.rho);
                w *= m.rho;
                let out = d.reflect(m.normal);
                if out.z >= -1e-12 {
                    t.escaped += w;
                    return None;
                }
                let hit = x.add(out.scale(-x.z / out.z));
                if hit.x * hit.x + hit.y * hit.y > self.r * self.r {
                    t.escaped += w;
                    return None;
                }
                (V3::new(hit.x, hit.y, 0.0), out)
            }
        };

        // Specular bounces down the pipe.
        let mut bounces = 0u32;
        loop {
            let s_exit = (-self.length - pos.z) / dir.z;
            let a = dir.x * dir.x + dir.y * dir.y;
            let s_wall = if a < 1e-18 {
                f64::INFINITY
            } else {
                let b = 2.0 * (pos.x * dir.x + pos.y * dir.y);
                let c = pos.x * pos.x + pos.y * pos.y - self.r * self.r;
                let disc = (b * b - 4.0 * a * c).max(0.0);
                (-b + disc.sqrt()) / (2.0 * a)
            };
            if s_exit <= s_wall {
                pos = pos.add(dir.scale(s_exit));
                pos.z = -self.length;
                break;
            }
            bounces += 1;
            if bounces > self.bounce_cap {
                t.bounce_capped += w;
                return None;
            }
            pos = pos.add(dir.scale(s_wall));
            let k = self.r / (pos.x * pos.x + pos.y * pos.y).sqrt();
            pos.x *= k;
            pos.y *= k;
            t.absorbed_walls += w * (1.0 - self.rho_wall);
            w *= self.rho_wall;
            dir = dir.reflect(V3::new(pos.x / self.r, pos.y / self.r, 0.0));
        }

        if let Some(df) = &self.diffuser {
            t.absorbed_diffuser += w * (1.0 - df.throughput);
            w *= df.throughput;
            match df.transmit(pos, dir) {
                Some(out) => dir = out,
                None => {
                    t.escaped += w;
                    return None;
                }
            }
        }

        let s = (self.z_canopy - pos.z) / dir.z;
        Some((pos.x + s * dir.x, pos.y + s * dir.y, w))
    }

    fn in_target(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.half_w && y.abs() <= self.half_d
    }
}

impl Diffuser {
    /// Refraction through a pyramid facet then the flat underside.
    fn transmit(&self, pos: V3, dir: V3) -> Option<V3> {
        let dx = pos.x.rem_euclid(self.pitch) - 0.5 * self.pitch;
        let dy = pos.y.rem_euclid(self.pitch) - 0.5 * self.pitch;
        let mut n = if dx.abs() > dy.abs() {
            V3::new(dx.signum() * self.sin_s, 0.0, self.cos_s)
        } else {
            V3::new(0.0, dy.signum() * self.sin_s, self.cos_s)
        };
        if dir.dot(n) >= 0.0 {
            // Grazing rays see the facets that face them.
            n = V3::new(-n.x, -n.y, n.z);
            if dir.dot(n) >= 0.0 {
                return None;
            }
        }
        let inside = refract(dir, n, 1.0 / self.index)?;
        if inside.z >= 0.0 {
            return None;
        }
        refract(inside, V3::new(0.0, 0.0, 1.0), self.index)
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform point on a disc of radius `r` in the xy plane.
fn sample_disc(rng: &mut ChaCha8Rng, r: f64) -> V3 {
    let rho = r * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    V3::new(rho * phi.cos(), rho * phi.sin(), 0.0)
}

struct ChunkOut {
    tally: TraceTally,
    flux: Vec<f64>,
}

/// Runs `cfg.rays` launches in fixed-size chunks. Chunk `k` draws from
/// stream `k` of a generator keyed by `key`, and chunks are reduced in
/// index order, so the result does not depend on the worker count.
fn run_chunks(
    scene: &Scene,
    cfg: &TraceConfig,
    key: u64,
    map: Option<&FluxMap>,
    sample: &(dyn Fn(&Scene, &mut ChaCha8Rng) -> Launch + Sync),
) -> ChunkOut {
    let n_chunks = cfg.rays.div_ceil(cfg.chunk_size);
    let cells = map.map_or(0, |m| m.nx * m.ny);
    let run = |k: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(k as u64);
        let n = cfg.chunk_size.min(cfg.rays - k * cfg.chunk_size);
        let mut tally = TraceTally::default();
        let mut flux = vec![0.0; cells];
        for _ in 0..n {
            let launch = sample(scene, &mut rng);
            let w0 = launch.weight;
            let Some((x, y, w)) = scene.trace(&mut rng, &launch, &mut tally) else {
                continue;
            };
            let cs = &mut tally.chamber_sums;
            cs.x += w;
            cs.xx += w * w;
            cs.xw += w * w0;
            if scene.in_target(x, y) {
                tally.target += w;
                let ts = &mut tally.target_sums;
                ts.x += w;
                ts.xx += w * w;
                ts.xw += w * w0;
            } else {
                tally.chamber_outside += w;
            }
            if let Some(i) = map.and_then(|m| m.cell_index(x, y)) {
                flux[i] += w;
            }
        }
        ChunkOut { tally, flux }
    };
    let parts: Vec<ChunkOut> = cfg.with_pool(|| (0..n_chunks).into_par_iter().map(run).collect());
    let mut out = ChunkOut {
        tally: TraceTally::default(),
        flux: vec![0.0; cells],
    };
    for p in &parts {
        out.tally.merge(&p.tally);
        for (a, b) in out.flux.iter_mut().zip(&p.flux) {
            *a += b;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectTrace {
    pub altitude_deg: f64,
    pub tilt_deg: f64,
    pub eta: f64,
    pub stderr: f64,
    pub tally: TraceTally,
    pub flux: FluxMap,
}

/// Direct-beam efficiency at one solar altitude.
pub fn trace_direct(geom: &LpGeometry, alt_deg: f64, cfg: &TraceConfig) -> Result<DirectTrace> {
    geom.validate()?;
    cfg.validate()?;
    if !(alt_deg > 0.0 && alt_deg <= 90.0) {
        return Err(Error::Domain(format!(
            "solar altitude {alt_deg} outside (0, 90]"
        )));
    }
    let tilt = mirror_tilt(alt_deg);
    let scene = Scene::new(geom, tilt, cfg.bounce_cap);
    let (sa, ca) = alt_deg.to_radians().sin_cos();
    let d = V3::new(-ca, 0.0, -sa);
    // Unit-weight launches; the stream split carries the area ratio.
    let norm = 1.0 / (sa + scene.mirror.as_ref().map_or(0.0, |m| m.projected(d)));
    let mut map = FluxMap::new(cfg.flux_pitch_m, cfg.flux_half_extent_m);
    let key = splitmix(cfg.seed ^ splitmix(alt_deg.to_bits()));
    let out = run_chunks(&scene, cfg, key, Some(&map), &|s, rng| {
        s.launch(rng, d, sa, norm)
    });

    let admitted_w = cfg.reference_irradiance * geom.aperture_area() / norm;
    map.fill(&out.flux, out.tally.incident, admitted_w);
    Ok(DirectTrace {
        altitude_deg: alt_deg,
        tilt_deg: tilt,
        eta: out.tally.eta_target(),
        stderr: out.tally.stderr_target(),
        tally: out.tally,
        flux: map,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandTrace {
    pub upper_edge_deg: f64,
    pub eta_th: f64,
    pub eta_crop: f64,
    pub stderr_th: f64,
    pub stderr_crop: f64,
    pub tally: TraceTally,
}

/// Per-band diffuse efficiencies at a fixed mirror tilt for isotropic
/// radiance over the sun-side half of the sky.
pub fn trace_diffuse_bands(
    geom: &LpGeometry,
    tilt_deg: f64,
    cfg: &TraceConfig,
) -> Result<Vec<BandTrace>> {
    geom.validate()?;
    cfg.validate()?;
    let scene = Scene::new(geom, tilt_deg, cfg.bounce_cap);
    BAND_EDGES
        .iter()
        .map(|&edge| {
            let lo = (edge - 10.0).to_radians().sin();
            let hi = edge.to_radians().sin();
            // Uniform in sin α and azimuth is uniform in solid angle; each
            // stream is then weighted by its projected area.
            let sample = move |s: &Scene, rng: &mut ChaCha8Rng| {
                let sa = lo + (hi - lo) * rng.random::<f64>();
                let ca = (1.0 - sa * sa).max(0.0).sqrt();
                let phi = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
                let d = V3::new(-ca * phi.cos(), -ca * phi.sin(), -sa);
                s.launch(rng, d, sa, 1.0)
            };
            let key = splitmix(
                cfg.seed ^ splitmix(tilt_deg.to_bits()) ^ splitmix(edge.to_bits().rotate_left(17)),
            );
            let out = run_chunks(&scene, cfg, key, None, &sample);
            Ok(BandTrace {
                upper_edge_deg: edge,
                eta_th: out.tally.eta_chamber(),
                eta_crop: out.tally.eta_target(),
                stderr_th: out.tally.stderr_chamber(),
                stderr_crop: out.tally.stderr_target(),
                tally: out.tally,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rays: usize) -> TraceConfig {
        TraceConfig {
            rays,
            ..Default::default()
        }
    }

    #[test]
    fn refraction_obeys_snell() {
        let inc = 30f64.to_radians();
        let d = V3::new(inc.sin(), 0.0, -inc.cos());
        let t = refract(d, V3::new(0.0, 0.0, 1.0), 1.0 / 1.5).unwrap();
        assert!((t.x - inc.sin() / 1.5).abs() < 1e-12);
        let steep = V3::new(0.8f64, 0.0, -0.6f64);
        assert!(refract(steep, V3::new(0.0, 0.0, 1.0), 1.5).is_none());
    }

    #[test]
    fn mirror_reflects_the_beam_straight_down() {
        for alt in [5.0, 30.0, 70.0] {
            let scene = Scene::new(&LpGeometry::default(), mirror_tilt(alt), 50);
            let (sa, ca) = f64::to_radians(alt).sin_cos();
            let out = V3::new(-ca, 0.0, -sa).reflect(scene.mirror.unwrap().normal);
            assert!(out.x.abs() < 1e-12 && (out.z + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lossless_straight_shot_lands_everything() {
        let g = LpGeometry {
            mirror_enabled: false,
            diffuser_enabled: false,
            ..LpGeometry::default().lossless()
        };
        let tr = trace_direct(&g, 90.0, &cfg(20_000)).unwrap();
        assert!((tr.eta - 1.0).abs() < 1e-12, "{}", tr.eta);
    }

    #[test]
    fn tally_closes() {
        for alt in [10.0, 45.0, 80.0] {
            let tr = trace_direct(&LpGeometry::default(), alt, &cfg(20_000)).unwrap();
            let t = tr.tally;
            assert!((t.accounted() - t.incident).abs() < 1e-9 * t.incident);
        }
    }

    #[test]
    fn interception_matches_projected_areas() {
        let g = LpGeometry::default();
        for alt in [15.0, 50.0] {
            let tr = trace_direct(&g, alt, &cfg(50_000)).unwrap();
            let expect = super::super::mirror_interception_ratio(&g, alt);
            let got = tr.tally.mirror_interception();
            assert!(
                (got / expect - 1.0).abs() < 0.03,
                "{alt}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn low_sun_relies_on_the_mirror() {
        let with = trace_direct(&LpGeometry::default(), 20.0, &cfg(20_000)).unwrap();
        let without = trace_direct(
            &LpGeometry {
                mirror_enabled: false,
                ..Default::default()
            },
            20.0,
            &cfg(20_000),
        )
        .unwrap();
        assert!(with.eta > 0.3, "{}", with.eta);
        assert!(without.eta < 0.05, "{}", without.eta);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let g = LpGeometry::default();
        let one = trace_direct(
            &g,
            35.0,
            &TraceConfig {
                workers: 1,
                ..cfg(20_000)
            },
        )
        .unwrap();
        let four = trace_direct(
            &g,
            35.0,
            &TraceConfig {
                workers: 4,
                ..cfg(20_000)
            },
        )
        .unwrap();
        assert_eq!(one.eta.to_bits(), four.eta.to_bits());
        assert_eq!(one.flux, four.flux);
    }

    #[test]
    fn rejects_small_budgets_and_bad_altitude() {
        let g = LpGeometry::default();
        assert!(trace_direct(&g, 45.0, &cfg(100)).is_err());
        assert!(trace_direct(&g, 0.0, &cfg(20_000)).is_err());
    }

    #[test]
    fn diffuse_crop_never_exceeds_chamber() {
        for b in trace_diffuse_bands(&LpGeometry::default(), 70.0, &cfg(10_000)).unwrap() {
            assert!(b.eta_crop <= b.eta_th);
            let t = b.tally;
            assert!((t.accounted() - t.incident).abs() < 1e-9 * t.incident);
        }
    }
}
