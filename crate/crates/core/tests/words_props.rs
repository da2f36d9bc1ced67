use lpvssa::words::{car, checked_car, enumerate_up_to, index_of, word_at};
use lpvssa::Word;
use proptest::prelude::*;

fn word_strategy(max_np: usize, max_len: usize) -> impl Strategy<Value = Word> {
    (0..=max_np).prop_flat_map(move |np| {
        proptest::collection::vec(0..=np, 0..=max_len).prop_map(move |s| Word::new(np, s).unwrap())
    })
}

#[test]
fn car_matches_brute_force_count() {
    for np in 0usize..4 {
        for n in 0..6 {
            let count: usize = (0..=n).map(|k| (np + 1).pow(k as u32)).sum();
            assert_eq!(car(np, n), count);
            assert_eq!(enumerate_up_to(np, n).len(), count);
        }
    }
    assert_eq!(checked_car(usize::MAX, 2), None);
}

#[test]
fn enumeration_is_strictly_increasing() {
    for np in 0usize..4 {
        let words = enumerate_up_to(np, 4);
        assert!(words[0].is_empty());
        for pair in words.windows(2) {
            assert!(pair[0] < pair[1], "{} !< {}", pair[0], pair[1]);
            assert!(pair[0].len() <= pair[1].len());
        }
    }
}

#[test]
fn small_alphabet_order() {
    let listed: Vec<String> = enumerate_up_to(1, 2).iter().map(|w| w.to_string()).collect();
    assert_eq!(listed, ["eps", "0", "1", "00", "01", "10", "11"]);
}

proptest! {
    #[test]
    fn ordinal_roundtrip(np in 0usize..5, n in 0usize..5, seed in any::<u64>()) {
        let total = car(np, n);
        let k = (seed as usize) % total;
        let w = word_at(k, np, n).unwrap();
        prop_assert!(w.len() <= n);
        prop_assert_eq!(index_of(&w, n).unwrap(), k);
    }

    #[test]
    fn text_roundtrip(w in word_strategy(12, 8)) {
        let back = Word::parse(w.np(), &w.to_string()).unwrap();
        prop_assert_eq!(back, w);
    }

    #[test]
    fn concat_and_order_agree(a in word_strategy(3, 5), b in proptest::collection::vec(0usize..=3, 0..5)) {
        let np = a.np();
        let b = Word::new(np, b.into_iter().map(|s| s % (np + 1)).collect()).unwrap();
        let ab = a.concat(&b).unwrap();
        prop_assert_eq!(ab.len(), a.len() + b.len());
        prop_assert_eq!(&ab.symbols()[..a.len()], a.symbols());
        // a strict prefix is shorter, hence earlier
        if !b.is_empty() {
            prop_assert!(a < ab);
        }
        let n = ab.len();
        prop_assert!(index_of(&a, n).unwrap() <= index_of(&ab, n).unwrap());
    }

    #[test]
    fn push_and_prepend(w in word_strategy(4, 6), s in 0usize..5) {
        let s = s % (w.np() + 1);
        let pushed = w.push(s).unwrap();
        let prepended = w.prepend(s).unwrap();
        prop_assert_eq!(pushed.symbols().last(), Some(&s));
        prop_assert_eq!(prepended.symbols().first(), Some(&s));
        prop_assert_eq!(&pushed.symbols()[..w.len()], w.symbols());
        prop_assert_eq!(&prepended.symbols()[1..], w.symbols());
    }
}

#[test]
fn invalid_words_are_rejected() {
    assert!(Word::new(1, vec![2]).is_err());
    assert!(Word::parse(1, "012").is_err());
    assert!(Word::parse(2, "0x").is_err());
    assert!(Word::empty(1).concat(&Word::empty(2)).is_err());
    assert!(word_at(car(1, 2), 1, 2).is_err());
    assert!(index_of(&Word::repeat(1, 0, 3).unwrap(), 2).is_err());
}
