//! Instrumentation and the benchmark harness.
//!
//! The quantities here are software analogs of GPU counters: per-stage wall
//! time, active path counts, dispatched work items and an occupancy model
//! over virtual warps. Frame times cover integrator work only; there is no
//! presentation or display cost in them.

use crate::config::{IntegratorKind, RenderConfig};
use crate::film::{Film, FilmError};
use crate::integrator::make_integrator;
use crate::scene::Scene;
use crate::Rgb;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use thiserror::Error;

/// Tolerance of the benchmark's equivalence gate, in linear radiance.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-5;

/// Column order of the per-bounce block of [`write_csv`].
pub const STATS_HEADER: [&str; 19] = [
    "integrator",
    "frame",
    "sample_index",
    "bounce",
    "active_pre",
    "active_post",
    "dispatched",
    "workgroups",
    "occupancy",
    "intersect_ns",
    "shade_ns",
    "shadow_ns",
    "compact_ns",
    "prepare_ns",
    "raygen_ns",
    "trace_ns",
    "accumulate_ns",
    "frame_ns",
    "clamped",
];

/// Column order of the summary block of [`write_csv`].
pub const SUMMARY_HEADER: [&str; 8] = [
    "integrator",
    "frames",
    "mean_ms",
    "min_ms",
    "fps",
    "speedup",
    "total_dispatched",
    "max_abs_vs_mega",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BounceStats {
    pub bounce: u32,
    /// Live paths entering the bounce.
    pub active_pre: usize,
    /// Live paths leaving the bounce.
    pub active_post: usize,
    /// Work items issued to the intersect and shade stages.
    pub dispatched: u64,
    pub workgroups: u64,
    pub occupancy: f64,
    pub intersect_ns: u64,
    pub shade_ns: u64,
    pub shadow_ns: u64,
    pub compact_ns: u64,
    pub prepare_ns: u64,
}

impl BounceStats {
    pub fn stage_ns(&self) -> u64 {
        self.intersect_ns + self.shade_ns + self.shadow_ns + self.compact_ns + self.prepare_ns
    }
}

/// Statistics of one rendered frame. `bounces` always has `max_depth` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub integrator: IntegratorKind,
    pub sample_index: u32,
    /// Wall time of the path tracing loop (all bounces).
    pub trace_ns: u64,
    pub raygen_ns: u64,
    pub accumulate_ns: u64,
    pub frame_ns: u64,
    pub clamped: u64,
    pub bounces: Vec<BounceStats>,
}

impl StageStats {
    pub fn total_dispatched(&self) -> u64 {
        self.bounces.iter().map(|b| b.dispatched).sum()
    }

    /// Sum of all separately timed stages.
    pub fn stage_sum_ns(&self) -> u64 {
        let bounce: u64 = self.bounces.iter().map(BounceStats::stage_ns).sum();
        match self.integrator {
            IntegratorKind::Mega => self.trace_ns + self.accumulate_ns,
            _ => self.raygen_ns + bounce + self.accumulate_ns,
        }
    }

    pub fn active_counts(&self) -> Vec<usize> {
        self.bounces.iter().map(|b| b.active_pre).collect()
    }
}

/// Fraction of active lanes among groups that hold any active lane.
pub fn occupancy(lane_activity: &[bool], group_size: usize) -> f64 {
    assert!(group_size >= 1, "group size must be positive");
    let mut active = 0usize;
    let mut groups = 0usize;
    for group in lane_activity.chunks(group_size) {
        let k = group.iter().filter(|&&a| a).count();
        if k > 0 {
            active += k;
            groups += 1;
        }
    }
    if groups == 0 {
        0.0
    } else {
        active as f64 / (groups * group_size) as f64
    }
}

/// Per-bounce statistics of the megakernel's retirement model. Lanes are
/// pixels in order, grouped into warps; a lane is active at bounce `b` while
/// its path is still tracing (`lengths[p] > b`), and a warp stays resident
/// as long as any of its lanes is active. `dispatched` counts resident lanes.
pub fn megakernel_bounce_stats(lengths: &[u32], max_depth: u32, warp_size: usize) -> Vec<BounceStats> {
    let warp = warp_size.max(1);
    (0..max_depth)
        .map(|b| {
            let lanes: Vec<bool> = lengths.iter().map(|&l| l > b).collect();
            let mut resident_lanes = 0u64;
            let mut resident_groups = 0u64;
            for g in lanes.chunks(warp) {
                if g.iter().any(|&a| a) {
                    resident_lanes += g.len() as u64;
                    resident_groups += 1;
                }
            }
            BounceStats {
                bounce: b,
                active_pre: lanes.iter().filter(|&&a| a).count(),
                active_post: lengths.iter().filter(|&&l| l > b + 1).count(),
                dispatched: resident_lanes,
                workgroups: resident_groups,
                occupancy: occupancy(&lanes, warp),
                ..BounceStats::default()
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("image sizes differ: {a} vs {b}")]
    DimensionMismatch { a: String, b: String },
}

/// Channel-wise difference metrics between two images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageDiff {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub rmse: f64,
    /// Number of channel values compared.
    pub count: usize,
    /// Pixels with any nonzero difference.
    pub differing_pixels: usize,
    /// Pixel holding `max_abs`, if any difference exists.
    pub worst_pixel: Option<usize>,
}

impl ImageDiff {
    pub fn is_identical(&self) -> bool {
        self.max_abs == 0.0
    }
}

impl std::fmt::Display for ImageDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_identical() {
            return write!(f, "identical (max 0, mean 0, rmse 0)");
        }
        write!(
            f,
            "max {:.6e}, mean {:.6e}, rmse {:.6e}, {} differing pixels",
            self.max_abs, self.mean_abs, self.rmse, self.differing_pixels
        )?;
        if let Some(p) = self.worst_pixel {
            write!(f, ", worst at pixel {p}")?;
        }
        Ok(())
    }
}

pub fn compare_images(a: &[Rgb], b: &[Rgb]) -> Result<ImageDiff, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::DimensionMismatch {
            a: format!("{} pixels", a.len()),
            b: format!("{} pixels", b.len()),
        });
    }
    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0;
    let mut sum_sq = 0.0;
    let mut differing_pixels = 0;
    let mut worst_pixel = None;
    for (p, (x, y)) in a.iter().zip(b).enumerate() {
        let d = (*x - *y).abs();
        if d.max_element() > 0.0 || d.is_nan() {
            differing_pixels += 1;
        }
        for c in d.to_array() {
            sum_abs += c;
            sum_sq += c * c;
            if c > max_abs || (c.is_nan() && !max_abs.is_nan()) {
                max_abs = c;
                worst_pixel = Some(p);
            }
        }
    }
    let count = a.len() * 3;
    let (mean_abs, rmse) = if count == 0 {
        (0.0, 0.0)
    } else {
        (sum_abs / count as f64, (sum_sq / count as f64).sqrt())
    };
    Ok(ImageDiff {
        max_abs,
        mean_abs,
        rmse,
        count,
        differing_pixels,
        worst_pixel,
    })
}

pub fn compare_films(a: &Film, b: &Film) -> Result<ImageDiff, MetricsError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(MetricsError::DimensionMismatch {
            a: format!("{}x{}", a.width, a.height),
            b: format!("{}x{}", b.width, b.height),
        });
    }
    compare_images(&a.accum, &b.accum)
}

#[derive(Debug, Clone)]
pub struct IntegratorReport {
    pub kind: IntegratorKind,
    /// Timed frames, warmup excluded.
    pub frames: Vec<StageStats>,
    pub mean_ms: f64,
    pub min_ms: f64,
    pub fps: f64,
    /// Megakernel mean frame time over this integrator's.
    pub speedup: f64,
    pub film: Film,
    /// Difference of the final film against the megakernel's.
    pub diff_vs_mega: ImageDiff,
}

impl IntegratorReport {
    pub fn total_dispatched(&self) -> u64 {
        self.frames.iter().map(StageStats::total_dispatched).sum()
    }

    /// Mean per-bounce occupancy over the timed frames.
    pub fn mean_occupancy(&self) -> Vec<f64> {
        mean_per_bounce(&self.frames, |b| b.occupancy)
    }

    pub fn mean_active(&self) -> Vec<f64> {
        mean_per_bounce(&self.frames, |b| b.active_pre as f64)
    }
}

fn mean_per_bounce(frames: &[StageStats], f: impl Fn(&BounceStats) -> f64) -> Vec<f64> {
    let depth = frames.first().map_or(0, |s| s.bounces.len());
    (0..depth)
        .map(|b| frames.iter().map(|s| f(&s.bounces[b])).sum::<f64>() / frames.len() as f64)
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: RenderConfig,
    pub width: u32,
    pub height: u32,
    pub repeat: u32,
    /// Megakernel, wavefront without compaction, wavefront, in that order.
    pub integrators: Vec<IntegratorReport>,
}

impl BenchReport {
    pub fn get(&self, kind: IntegratorKind) -> Option<&IntegratorReport> {
        self.integrators.iter().find(|r| r.kind == kind)
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repeat must be at least 1")]
    InvalidRepeat,
    #[error(transparent)]
    Film(#[from] FilmError),
    #[error("{kind} output differs from megakernel: {diff}")]
    Equivalence { kind: IntegratorKind, diff: ImageDiff },
}

/// Renders `repeat` one-sample frames with each integrator after one
/// discarded warmup frame, then checks that all final films agree before
/// reporting timings.
pub fn run_benchmark(scene: &Scene, config: &RenderConfig, repeat: u32) -> Result<BenchReport, BenchError> {
    if repeat == 0 {
        return Err(BenchError::InvalidRepeat);
    }
    let (w, h) = (scene.camera.width, scene.camera.height);
    let order = [
        IntegratorKind::Mega,
        IntegratorKind::WaveNocompact,
        IntegratorKind::Wave,
    ];
    let mut runs = Vec::new();
    for kind in order {
        let mut integrator = make_integrator(kind, config);
        integrator.render_frame(scene, &mut Film::new(w, h), 0)?;
        let mut film = Film::new(w, h);
        let frames = (0..repeat)
            .map(|s| integrator.render_frame(scene, &mut film, s))
            .collect::<Result<Vec<_>, _>>()?;
        runs.push((kind, frames, film));
    }

    let mega_film = runs[0].2.clone();
    let mega_mean = mean_ms(&runs[0].1);
    let mut integrators = Vec::new();
    for (kind, frames, film) in runs {
        let diff = compare_films(&mega_film, &film).expect("films share the scene resolution");
        if !(diff.max_abs <= EQUIVALENCE_TOLERANCE) {
            return Err(BenchError::Equivalence { kind, diff });
        }
        let mean = mean_ms(&frames);
        let min = frames.iter().map(|s| s.frame_ns).min().unwrap_or(0) as f64 / 1e6;
        integrators.push(IntegratorReport {
            kind,
            mean_ms: mean,
            min_ms: min,
            fps: if mean > 0.0 { 1000.0 / mean } else { f64::INFINITY },
            speedup: if kind == IntegratorKind::Mega {
                1.0
            } else {
                mega_mean / mean
            },
            frames,
            film,
            diff_vs_mega: diff,
        });
    }
    Ok(BenchReport {
        config: config.clone(),
        width: w,
        height: h,
        repeat,
        integrators,
    })
}

fn mean_ms(frames: &[StageStats]) -> f64 {
    frames.iter().map(|s| s.frame_ns as f64).sum::<f64>() / frames.len() as f64 / 1e6
}

fn write_stats_rows<W: Write>(w: &mut csv::Writer<W>, frames: &[StageStats]) -> csv::Result<()> {
    for (f, s) in frames.iter().enumerate() {
        for b in &s.bounces {
            w.write_record([
                s.integrator.name().to_string(),
                f.to_string(),
                s.sample_index.to_string(),
                b.bounce.to_string(),
                b.active_pre.to_string(),
                b.active_post.to_string(),
                b.dispatched.to_string(),
                b.workgroups.to_string(),
                format!("{:.6}", b.occupancy),
                b.intersect_ns.to_string(),
                b.shade_ns.to_string(),
                b.shadow_ns.to_string(),
                b.compact_ns.to_string(),
                b.prepare_ns.to_string(),
                s.raygen_ns.to_string(),
                s.trace_ns.to_string(),
                s.accumulate_ns.to_string(),
                s.frame_ns.to_string(),
                s.clamped.to_string(),
            ])?;
        }
    }
    Ok(())
}

/// Per-bounce rows of a plain render, with the [`STATS_HEADER`] columns.
pub fn write_frame_stats<W: Write>(frames: &[StageStats], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATS_HEADER)?;
    write_stats_rows(&mut w, frames)?;
    w.flush()
}

/// Writes the per-bounce block, a blank line, then the summary block.
pub fn write_csv<W: Write>(report: &BenchReport, out: W) -> io::Result<()> {
    let mut out = out;
    let mut stats = csv::Writer::from_writer(&mut out);
    stats.write_record(STATS_HEADER)?;
    for r in &report.integrators {
        write_stats_rows(&mut stats, &r.frames)?;
    }
    stats.flush()?;
    drop(stats);
    out.write_all(b"\n")?;
    let mut summary = csv::Writer::from_writer(&mut out);
    summary.write_record(SUMMARY_HEADER)?;
    for r in &report.integrators {
        summary.write_record([
            r.kind.name().to_string(),
            r.frames.len().to_string(),
            format!("{:.6}", r.mean_ms),
            format!("{:.6}", r.min_ms),
            format!("{:.3}", r.fps),
            format!("{:.4}", r.speedup),
            r.total_dispatched().to_string(),
            format!("{:e}", r.diff_vs_mega.max_abs),
        ])?;
    }
    summary.flush()?;
    Ok(())
}

pub fn emit_csv(report: &BenchReport, path: impl AsRef<Path>) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(report, &mut file)?;
    file.flush()
}

/// Frame timing table: one row per integrator.
pub fn format_timing_table(report: &BenchReport) -> String {
    let mut s = String::new();
    let c = &report.config;
    let _ = writeln!(
        s,
        "Frame timing ({}x{}, 1 spp per frame, depth {}, NEE {}, {} worker(s), {} timed frame(s) after 1 warmup)",
        report.width,
        report.height,
        c.max_depth,
        if c.nee { "on" } else { "off" },
        c.workers,
        report.repeat
    );
    let _ = writeln!(s, "Integrator time only; no presentation or display cost.");
    let _ = writeln!(
        s,
        "{:<16} {:>11} {:>11} {:>10} {:>9}",
        "integrator", "mean ms", "min ms", "FPS", "speedup"
    );
    for r in &report.integrators {
        let _ = writeln!(
            s,
            "{:<16} {:>11.3} {:>11.3} {:>10.2} {:>8.2}x",
            r.kind.name(),
            r.mean_ms,
            r.min_ms,
            r.fps,
            r.speedup
        );
    }
    s
}

/// Execution-behaviour table: software analogs of GPU throughput counters,
/// not hardware measurements.
pub fn format_behavior_table(report: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Execution behaviour (software analogs: warp-{} occupancy, dispatched work items, active paths)",
        report.config.warp_size
    );
    let _ = writeln!(
        s,
        "{:<16} {:>6} {:>12} {:>10} {:>16}",
        "integrator", "bounce", "mean active", "occupancy", "dispatched/frame"
    );
    for r in &report.integrators {
        let occ = r.mean_occupancy();
        let act = r.mean_active();
        let frames = r.frames.len() as f64;
        for (b, (o, a)) in occ.iter().zip(&act).enumerate() {
            let d: u64 = r.frames.iter().map(|f| f.bounces[b].dispatched).sum();
            let _ = writeln!(
                s,
                "{:<16} {:>6} {:>12.1} {:>10.4} {:>16.1}",
                r.kind.name(),
                b,
                a,
                o,
                d as f64 / frames
            );
        }
    }
    let _ = writeln!(s, "{:<16} {:>18}", "integrator", "total dispatched");
    for r in &report.integrators {
        let _ = writeln!(s, "{:<16} {:>18}", r.kind.name(), r.total_dispatched());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupancy_examples() {
        assert_eq!(occupancy(&vec![true; 256], 32), 1.0);
        let mut lanes = vec![false; 256];
        lanes[32..48].iter_mut().for_each(|l| *l = true);
        assert_eq!(occupancy(&lanes, 32), 0.5);
        assert_eq!(occupancy(&[false; 100], 32), 0.0);
        assert_eq!(occupancy(&[], 32), 0.0);
    }

    #[test]
    fn megakernel_model() {
        // Two warps of 4: lengths (3,1,1,1) and (1,1,1,1).
        let stats = megakernel_bounce_stats(&[3, 1, 1, 1, 1, 1, 1, 1], 4, 4);
        assert_eq!(stats.len(), 4);
        assert_eq!(stats[0].active_pre, 8);
        assert_eq!(stats[0].occupancy, 1.0);
        assert_eq!(stats[1].active_pre, 1);
        assert_eq!(stats[1].dispatched, 4);
        assert_eq!(stats[1].occupancy, 0.25);
        assert_eq!(stats[3].active_pre, 0);
        assert_eq!(stats[3].occupancy, 0.0);
        assert_eq!(stats[0].active_post, 1);
    }

    #[test]
    fn identical_images() {
        let a = vec![Rgb::new(0.1, 0.2, 0.3); 10];
        let d = compare_images(&a, &a).unwrap();
        assert_eq!((d.max_abs, d.mean_abs, d.rmse), (0.0, 0.0, 0.0));
        assert!(d.is_identical());
        assert_eq!(d.worst_pixel, None);
    }

    #[test]
    fn single_channel_offset() {
        let a = vec![Rgb::splat(0.5); 16];
        let mut b = a.clone();
        b[7].y += 0.001;
        let d = compare_images(&a, &b).unwrap();
        assert!((d.max_abs - 0.001).abs() < 1e-15);
        assert_eq!(d.worst_pixel, Some(7));
        assert_eq!(d.differing_pixels, 1);
        assert!(!d.is_identical());
        // Tiny differences are never reported as zero.
        b[7].y = f64::from_bits(0.5f64.to_bits() + 1);
        assert!(compare_images(&a, &b).unwrap().max_abs > 0.0);
    }

    #[test]
    fn rmse_identity() {
        let a: Vec<Rgb> = (0..50).map(|i| Rgb::splat(i as f64 * 0.01)).collect();
        let b: Vec<Rgb> = (0..50).map(|i| Rgb::new((i * i) as f64 * 1e-3, 0.2, 0.0)).collect();
        let d = compare_images(&a, &b).unwrap();
        let sum_sq: f64 = a
            .iter()
            .zip(&b)
            .flat_map(|(x, y)| (*x - *y).to_array())
            .map(|c| c * c)
            .sum();
        assert!((d.rmse * d.rmse * d.count as f64 - sum_sq).abs() <= 1e-12 * sum_sq);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(compare_images(&[Rgb::ZERO], &[]).is_err());
        assert!(compare_films(&Film::new(2, 3), &Film::new(3, 2)).is_err());
    }
}
