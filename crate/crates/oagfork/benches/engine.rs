use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use oagfork::block_theory::normalize;
use oagfork::goldens;
use oagfork::oag_model::GroupElement;
use oagfork::par::{self, Mode};
use oagfork::sample::{Limits, Sampler};
use oagfork::scene::Scene;
use oagfork::verdict::{decide_forking, free_subtuple};

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn random_scenes(count: usize) -> Vec<Scene> {
    let mut s = Sampler::new(7);
    let lim = Limits::default();
    (0..count).map(|_| s.scene(&lim)).collect()
}

fn decide_goldens(c: &mut Criterion) {
    let scenes: Vec<Scene> = goldens::ALL.iter().map(|(n, _)| goldens::load(n).unwrap()).collect();
    let mut g = c.benchmark_group("decide_goldens");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_mode(mode);
            b.iter(|| scenes.iter().map(|s| decide_forking(s).unwrap().independent.forking).filter(|f| *f).count())
        });
    }
    g.finish();
}

fn decide_random(c: &mut Criterion) {
    let scenes = random_scenes(40);
    let mut g = c.benchmark_group("decide_random");
    g.sample_size(20);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_mode(mode);
            b.iter(|| scenes.iter().map(|s| decide_forking(s).unwrap().independent.forking).filter(|f| *f).count())
        });
    }
    g.finish();
}

fn normalize_random(c: &mut Criterion) {
    let inputs: Vec<(Scene, Vec<GroupElement>)> = random_scenes(40)
        .into_iter()
        .filter_map(|s| {
            let a = s.a_span().ok()?;
            let idx = free_subtuple(&s.ambient, &s.c, &a).ok()?;
            let cs: Vec<GroupElement> = idx.iter().map(|&i| s.c[i].clone()).collect();
            (!cs.is_empty()).then_some((s, cs))
        })
        .collect();
    let mut g = c.benchmark_group("normalize_random");
    g.sample_size(20);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_mode(mode);
            b.iter(|| {
                inputs
                    .iter()
                    .map(|(s, cs)| normalize(&s.ambient, cs, &s.a_span().unwrap(), &s.b_span().unwrap()).unwrap().elements.len())
                    .sum::<usize>()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, decide_goldens, decide_random, normalize_random);
criterion_main!(benches);
