//! Benchmarks for the hot paths: log parsing, outbreak simulation, and
//! whole-corpus analysis.

use std::hint::black_box;
use std::net::Ipv4Addr;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use wormtrace_core::analyze::{analyze_corpus, AnalyzeOptions};
use wormtrace_core::corpus::{Corpus, LogKind};
use wormtrace_core::event::HostId;
use wormtrace_core::logfmt::{parse_firewall_log, parse_ids_alert_log, YearHint};
use wormtrace_core::sim::{simulate, SimHost, SimulationConfig};

fn nodes(n: u8) -> Vec<SimHost> {
    (1..=n)
        .map(|i| SimHost::new(format!("NODE{i:02}"), Ipv4Addr::new(10, 0, 0, i)))
        .collect()
}

fn noisy_corpus(n: u8) -> Corpus {
    let cfg = SimulationConfig {
        hosts: nodes(n),
        seed_attacker: "NODE01".into(),
        rng_seed: 7,
        noise_per_host: 200,
        ..SimulationConfig::default()
    };
    simulate(&cfg).expect("valid config").0
}

fn biggest_firewall_log(corpus: &Corpus) -> (HostId, String) {
    let (name, text) = corpus
        .host_logs
        .iter()
        .filter_map(|(name, logs)| logs.get(&LogKind::Firewall).map(|t| (name, t)))
        .max_by_key(|(_, text)| text.len())
        .expect("simulated corpus has firewall logs");
    let host = corpus
        .manifest
        .hosts
        .iter()
        .find(|h| &h.name == name)
        .expect("log owner is declared");
    (HostId::new(host.name.clone(), host.ip), text.clone())
}

fn bench_parsing(c: &mut Criterion) {
    let corpus = noisy_corpus(12);
    let (host, firewall_text) = biggest_firewall_log(&corpus);
    let ids_text = corpus.ids_log.clone().expect("simulated corpus has alerts");
    let year = YearHint::new(2009).unwrap();

    let mut group = c.benchmark_group("parse");
    group.throughput(Throughput::Bytes(firewall_text.len() as u64));
    group.bench_function("firewall_log", |b| {
        b.iter(|| parse_firewall_log(black_box(&firewall_text), &host, false).unwrap())
    });
    group.throughput(Throughput::Bytes(ids_text.len() as u64));
    group.bench_function("ids_alert_log", |b| {
        b.iter(|| parse_ids_alert_log(black_box(&ids_text), year, false).unwrap())
    });
    group.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let cfg = SimulationConfig {
        hosts: nodes(8),
        seed_attacker: "NODE01".into(),
        rng_seed: 3,
        ..SimulationConfig::default()
    };
    c.bench_function("simulate/8_hosts", |b| {
        b.iter(|| simulate(black_box(&cfg)).unwrap())
    });
}

fn bench_analyze(c: &mut Criterion) {
    let corpus = noisy_corpus(12);
    let options = AnalyzeOptions::default();
    c.bench_function("analyze/12_hosts_noisy", |b| {
        b.iter(|| analyze_corpus(black_box(&corpus), &options).unwrap())
    });
}

criterion_group!(benches, bench_parsing, bench_simulate, bench_analyze);
criterion_main!(benches);
