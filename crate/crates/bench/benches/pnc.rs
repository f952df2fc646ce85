use criterion::{black_box, criterion_group, criterion_main, Criterion};
use netcom_core::num_complex::Complex64;
use netcom_core::pnc::{
    ap_detect_word, hub_decode, offline_search, online_select, pnc_encode, Qam4, SourceWord,
    DEFAULT_TOLERANCE,
};

fn search(c: &mut Criterion) {
    let q = Qam4::gray();
    c.bench_function("offline_search", |b| {
        b.iter(|| offline_search(black_box(&q), DEFAULT_TOLERANCE).unwrap())
    });
}

fn codec(c: &mut Criterion) {
    let q = Qam4::gray();
    let cat = offline_search(&q, DEFAULT_TOLERANCE).unwrap().catalog;
    let sel = online_select(3, 1, &cat).unwrap();
    let h = [Complex64::new(0.9, 0.2), Complex64::new(-0.3, 0.8)];
    let y = Complex64::new(0.31, -0.42);
    c.bench_function("ap_detect_word", |b| {
        b.iter(|| ap_detect_word(black_box(y), black_box(h), &q))
    });
    c.bench_function("encode_decode_16_words", |b| {
        b.iter(|| {
            for w in SourceWord::all() {
                let x1 = pnc_encode(&sel.m1, w).unwrap();
                let x2 = pnc_encode(&sel.m2, w).unwrap();
                black_box(hub_decode(&sel.combined, x1, x2).unwrap());
            }
        })
    });
}

criterion_group!(benches, search, codec);
criterion_main!(benches);
