use thermolab::entropy::{entropy_from_spectrum, estimate_from_periods, SpectrumConfig};
use thermolab::geometry::{LengthSpectrum, SurfaceGroup};
use thermolab::orbits::{continue_orbit, ContinuationConfig};
use thermolab::thermostat::FieldFamily;

fn setup() -> (SurfaceGroup, FieldFamily) {
    let g = SurfaceGroup::bolza().unwrap();
    let f = FieldFamily::default_field(&g);
    (g, f)
}

#[test]
fn longer_words_improve_the_estimate() {
    let (g, f) = setup();
    let short = entropy_from_spectrum(&g, &f, 0.0, &SpectrumConfig::new(6)).unwrap();
    let mut cfg = SpectrumConfig::new(10);
    cfg.max_length = 12.0;
    let long = entropy_from_spectrum(&g, &f, 0.0, &cfg).unwrap();
    assert!(!short.partial && !long.partial);
    assert!((long.h - 1.0).abs() <= (short.h - 1.0).abs(), "L=6 {} L=10 {}", short.h, long.h);
    assert!((long.h - 1.0).abs() < 0.05, "{}", long.h);
}

#[test]
fn integrated_periods_match_trace_lengths() {
    let (g, f) = setup();
    let scfg = SpectrumConfig::new(6);
    let spectrum = LengthSpectrum::compute(&g, scfg.max_word_len, scfg.max_length).unwrap();
    let cutoff = spectrum.complete_up_to(scfg.deficit);
    let entries = &spectrum.entries[..spectrum.count(cutoff)];
    let ccfg = ContinuationConfig::default();
    let lengths: Vec<f64> = entries.iter().map(|e| e.length()).collect();
    let mut integrated = Vec::with_capacity(entries.len());
    for e in entries {
        let orbit = continue_orbit(&g, &f, &e.geodesic, 0.0, &ccfg).unwrap();
        assert!((orbit.period - e.length()).abs() < 1e-6, "{}: {} vs {}", e.geodesic.class.label(), orbit.period, e.length());
        assert!((orbit.samples.t_end() - orbit.period).abs() < 1e-12);
        integrated.push(Some(orbit.period));
    }
    let traced: Vec<Option<f64>> = lengths.iter().copied().map(Some).collect();
    let a = estimate_from_periods(&lengths, &traced, cutoff).unwrap();
    let b = estimate_from_periods(&lengths, &integrated, cutoff).unwrap();
    assert!((a.h - b.h).abs() < 1e-6, "{} {}", a.h, b.h);
    let direct = entropy_from_spectrum(&g, &f, 0.0, &scfg).unwrap();
    assert_eq!(direct.h, a.h);
}
