use proauth::channel::{read_jsonl, write_jsonl, AdversaryKind, AdversaryModel, ListeningPattern, Origin};
use proauth::harness::{
    load_configs, run_experiment, run_trial, trial_seeds, write_results, ExperimentConfig, OutputFormat, ParamsConfig,
    CSV_HEADER,
};
use proauth::ProtocolId;

fn cfg(protocol: ProtocolId, n: usize, l: usize, kw: usize, trials: u64) -> ExperimentConfig {
    ExperimentConfig::new(protocol, ParamsConfig::new(n, l, kw), trials, 21)
}

fn sigma(p: f64, trials: f64) -> f64 {
    (p * (1.0 - p) / trials).sqrt()
}

#[test]
fn csv_rows_carry_layout_and_bound() {
    let mut c = cfg(ProtocolId::Ap2t, 2, 8, 8, 200);
    c.adversary = AdversaryModel::bitflip(None);
    let r = run_experiment(&c).unwrap();
    let mut out = Vec::new();
    write_results(std::slice::from_ref(&r), OutputFormat::Csv, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.split(',').count());
    assert_eq!(row[0], "ap2t");
    assert!(row.iter().any(|f| f.contains("tamper:(1-alpha)^d_min")));

    let mut json = Vec::new();
    write_results(&[r], OutputFormat::Json, &mut json).unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(parsed[0]["layout"]["v"], 132);
}

#[test]
fn eavesdropper_on_narrow_entries_is_limited_by_seed_space() {
    // With 8-bit entries, replaying a heard frame opens whenever the next key entry is zero.
    let mut c = cfg(ProtocolId::Ap2, 4, 8, 16, 200_000);
    c.adversary = AdversaryModel::of_kind(AdversaryKind::Eavesdrop, ListeningPattern::Always).attack_from(1);
    c.sessions_per_trial = 2;
    let r = run_experiment(&c).unwrap();
    let p = 2f64.powi(-8);
    assert!((r.adversary_success_rate - p).abs() <= 3.0 * sigma(p, 200_000.0), "{}", r.adversary_success_rate);
    assert_eq!(r.bound_source, "seed-guess:2^-l");
    assert!(r.pass);
}

#[test]
fn blind_pad_forgeries_match_the_keyword_bound() {
    let mut c = cfg(ProtocolId::Ap2, 2, 32, 8, 200_000);
    c.adversary = AdversaryModel::of_kind(AdversaryKind::Impersonate, ListeningPattern::Never);
    let r = run_experiment(&c).unwrap();
    let p = 2f64.powi(-8);
    assert!((r.adversary_success_rate - p).abs() <= 3.0 * sigma(p, 200_000.0), "{}", r.adversary_success_rate);
    assert_eq!(r.theoretical_bound, p);
}

#[test]
fn ap1_k_private_adversary_after_a_full_cycle() {
    // Missing one of every n sessions leaves every entry refreshed by an unseen vector.
    let n = 4;
    let mut c = cfg(ProtocolId::Ap1, n, 8, 8, 20_000);
    c.adversary = AdversaryModel::of_kind(
        AdversaryKind::Eavesdrop,
        ListeningPattern::KPrivate { window: n, k_private: 1, placement: Default::default() },
    );
    c.sessions_per_trial = 3 * n;
    let r = run_experiment(&c).unwrap();
    assert!(r.pass, "{}", r.adversary_success_rate);
}

#[test]
fn first_trial_transcripts_round_trip() {
    let text = r#"{"protocol": "ap1", "params": {"n": 4, "l": 8}, "trials": 5, "master_seed": 3,
                   "adversary": {"kind": "impersonate", "listening": {"rule": "never"}}, "sessions_per_trial": 6}"#;
    let c = load_configs(text).unwrap().remove(0);
    let spec = c.validate().unwrap();
    let a = run_trial(&c, &spec, trial_seeds(c.master_seed, 0, c.generator_id), true).unwrap();
    let b = run_trial(&c, &spec, trial_seeds(c.master_seed, 0, c.generator_id), true).unwrap();
    assert_eq!(a.transcripts, b.transcripts);
    assert_eq!(a.transcripts.iter().filter(|t| t.origin == Origin::Adversary).count(), 6);
    let mut buf = Vec::new();
    write_jsonl(&a.transcripts, &mut buf).unwrap();
    assert_eq!(read_jsonl(buf.as_slice()).unwrap(), a.transcripts);
}

#[test]
fn both_generators_run_honestly() {
    let mut c = cfg(ProtocolId::Ap2t, 2, 8, 8, 300);
    c.sessions_per_trial = 3;
    let a = run_experiment(&c).unwrap();
    c.generator_id = proauth::GeneratorId::SplitMix64;
    let b = run_experiment(&c).unwrap();
    assert_eq!(a.honest_accept_rate, 1.0);
    assert_eq!(b.honest_accept_rate, 1.0);
}
