use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use metores_bench::Workload;
use metores_core::model::{forward, loss_and_grad, Mode};
use metores_core::tokenizer::tokenize_align;
use metores_core::trainer::Adam;
use std::hint::black_box;

fn tokenize(c: &mut Criterion) {
    let w = Workload::desk(64);
    c.bench_function("tokenize_align/64 sentences", |b| {
        b.iter(|| {
            for s in &w.samples {
                black_box(tokenize_align(&s.text, s.span(), &w.vocab).unwrap());
            }
        })
    });
}

fn encode(c: &mut Criterion) {
    let w = Workload::desk(16);
    c.bench_function("forward/desk", |b| {
        b.iter(|| black_box(forward(&w.params, &w.inputs[0].0, Mode::Eval).unwrap()))
    });
}

fn train_step(c: &mut Criterion) {
    let w = Workload::desk(16);
    c.bench_function("train_step/desk batch 16", |b| {
        b.iter_batched(
            || (w.params.clone(), Adam::new(&w.params, 1e-3, 100)),
            |(mut params, mut adam)| {
                let g = loss_and_grad(&params, &w.inputs, Mode::Train { dropout_seed: 1 }).unwrap();
                adam.step(&mut params, &g.grads);
                black_box(params)
            },
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, tokenize, encode, train_step);
criterion_main!(benches);
