use proptest::prelude::*;
use translit::pipeline::{evaluate, grid_search, round_trip_check, split_corpus, train_direction, transliterate_word};
use translit::synth::gen_corpus;
use translit::{Corpus, Direction, SplitConfig, WindowSpec};

fn one_to_one_corpus() -> Corpus {
    let table = Direction::CyrToLat.bundled_table();
    let pairs = Corpus::bundled_lexicon()
        .pairs
        .into_iter()
        .filter(|(c, _)| c.chars().all(|ch| table.candidates(ch).is_some_and(|v| v.len() == 1)))
        .collect::<Vec<_>>();
    assert!(pairs.len() > 40, "{}", pairs.len());
    Corpus::new(pairs, "single-valued letters only")
}

#[test]
fn grid_prefers_smallest_window_on_ties() {
    let dir = Direction::CyrToLat;
    let table = dir.bundled_table();
    // every single-valued letter on its own, so nothing in validation is unseen
    let train = Corpus::new(
        table
            .entries()
            .filter(|(c, v)| v.len() == 1 && c.is_alphabetic())
            .map(|(c, v)| (c.to_string(), v[0].clone()))
            .collect(),
        "letters",
    );
    let val = one_to_one_corpus();
    let grid = grid_search(&train, &val, table, dir, 0..=3, 0..=3).unwrap();
    assert_eq!(grid.best_f1, 1.0);
    assert_eq!((grid.best.x, grid.best.y), (0, 0));

    let single = grid_search(&train, &val, dir.bundled_table(), dir, 2..=2, 1..=1).unwrap();
    assert_eq!((single.best.x, single.best.y, single.cells.len()), (2, 1, 1));
}

#[test]
fn grid_winner_dominates_every_cell() {
    let lexicon = Corpus::bundled_lexicon();
    let (train, val, _) = split_corpus(&lexicon, &SplitConfig::new(0.7, 0.15, 0.15, 1).unwrap()).unwrap();
    for dir in [Direction::CyrToLat, Direction::LatToCyr] {
        let grid = grid_search(&train, &val, dir.bundled_table(), dir, 0..=3, 0..=3).unwrap();
        assert!(grid.cells.iter().all(|c| c.validation_f1 <= grid.best_f1));
        let order: Vec<_> = grid.cells.iter().map(|c| (c.x, c.y)).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
    }
}

#[test]
fn training_is_byte_for_byte_deterministic() {
    let corpus = gen_corpus(800, 3).unwrap();
    let config = SplitConfig::new(0.7, 0.15, 0.15, 11).unwrap();
    let run = || {
        let (train, _, test) = split_corpus(&corpus, &config).unwrap();
        let dir = Direction::LatToCyr;
        let m = train_direction(&train, WindowSpec::new(3, 2).unwrap(), dir.bundled_table(), dir).unwrap().model;
        let report = evaluate(&m, &test, dir.bundled_table()).unwrap();
        (m.to_bytes(), report.to_json())
    };
    assert_eq!(run(), run());
}

#[test]
fn lexicon_models_reproduce_training_words() {
    let lexicon = Corpus::bundled_lexicon();
    let w = WindowSpec::default();
    let c2l = train_direction(&lexicon, w, Direction::CyrToLat.bundled_table(), Direction::CyrToLat).unwrap();
    assert!(c2l.failures.is_empty());
    assert_eq!(transliterate_word(&c2l.model, "қўзичоқ"), "qo'zichoq");
    assert_eq!(transliterate_word(&c2l.model, "шприц"), "shpris");
    let l2c = train_direction(&lexicon, w, Direction::LatToCyr.bundled_table(), Direction::LatToCyr).unwrap();
    assert_eq!(transliterate_word(&l2c.model, "quyosh"), "қуёш");
    assert_eq!(transliterate_word(&l2c.model, "dotsent"), "доцент");

    let empty: [&str; 0] = [];
    let r = round_trip_check(&c2l.model, &l2c.model, &empty).unwrap();
    assert_eq!((r.total, r.failures.len()), (0, 0));
    assert!(round_trip_check(&c2l.model, &c2l.model, &["бола"]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_partition_the_corpus(n in 10usize..400, seed in any::<u64>()) {
        let corpus = Corpus::new((0..n).map(|i| (format!("c{i}"), format!("l{i}"))).collect(), "ids");
        let (a, b, c) = split_corpus(&corpus, &SplitConfig::new(0.5, 0.3, 0.2, seed).unwrap()).unwrap();
        let mut all: Vec<_> = a.pairs.into_iter().chain(b.pairs).chain(c.pairs).collect();
        prop_assert_eq!(all.len(), n);
        all.sort();
        let mut orig = corpus.pairs.clone();
        orig.sort();
        prop_assert_eq!(all, orig);
    }

    #[test]
    fn transliteration_never_fails(text in "\\PC{0,40}") {
        let lexicon = Corpus::bundled_lexicon();
        let dir = Direction::LatToCyr;
        let m = train_direction(&lexicon, WindowSpec::new(1, 1).unwrap(), dir.bundled_table(), dir).unwrap().model;
        let _ = transliterate_word(&m, &text);
        let _ = translit::pipeline::transliterate_text(&m, &text);
    }
}
