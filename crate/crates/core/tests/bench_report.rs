use wavetrace_core::config::RenderConfig;
use wavetrace_core::metrics::{
    emit_csv, format_behavior_table, format_timing_table, run_benchmark, write_csv, BenchError, STATS_HEADER,
    SUMMARY_HEADER,
};
use wavetrace_core::scene::cornell_box;
use wavetrace_core::IntegratorKind;

fn small_report(repeat: u32) -> wavetrace_core::BenchReport {
    let mut scene = cornell_box();
    scene.set_resolution(24, 24);
    let config = RenderConfig {
        max_depth: 5,
        ..RenderConfig::default()
    };
    run_benchmark(&scene, &config, repeat).unwrap()
}

#[test]
fn report_rows_and_speedups() {
    let r = small_report(3);
    assert_eq!(r.integrators.len(), 3);
    let mega = r.get(IntegratorKind::Mega).unwrap();
    assert_eq!(mega.speedup, 1.0);
    for i in &r.integrators {
        assert_eq!(i.frames.len(), 3);
        assert!(i.diff_vs_mega.is_identical());
        assert!(i.min_ms <= i.mean_ms);
        assert!(i.fps > 0.0 && i.speedup > 0.0);
        assert_eq!(i.film.sample_count, 3);
    }
    let wave = r.get(IntegratorKind::Wave).unwrap();
    let flat = r.get(IntegratorKind::WaveNocompact).unwrap();
    assert!(wave.total_dispatched() < flat.total_dispatched());

    let t1 = format_timing_table(&r);
    for name in ["mega", "wave", "wave-nocompact", "speedup", "Integrator time only"] {
        assert!(t1.contains(name), "{t1}");
    }
    let t2 = format_behavior_table(&r);
    assert!(t2.contains("software analogs") && t2.contains("occupancy"), "{t2}");
}

#[test]
fn csv_schema_row_count_and_determinism() {
    let r = small_report(2);
    let mut a = Vec::new();
    write_csv(&r, &mut a).unwrap();
    let mut b = Vec::new();
    write_csv(&r, &mut b).unwrap();
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], STATS_HEADER.join(","));
    let rows = 3 * 2 * 5;
    assert_eq!(lines[rows + 1], "");
    assert_eq!(lines[rows + 2], SUMMARY_HEADER.join(","));
    assert_eq!(lines.len(), 1 + rows + 1 + 1 + 3);
    assert!(lines[rows + 3].starts_with("mega,2,"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stats.csv");
    emit_csv(&r, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn zero_repeat_is_rejected() {
    let scene = cornell_box();
    assert!(matches!(
        run_benchmark(&scene, &RenderConfig::default(), 0),
        Err(BenchError::InvalidRepeat)
    ));
}
