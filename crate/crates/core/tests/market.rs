use chrono::NaiveDate;
use proptest::prelude::*;

use swarch::market::{
    bucket_and_report, filter_chain, read_chain, tenor_for_days, write_chain, EvaluationRecord, FilterConfig, OptionKind,
    OptionQuote, RateCurve, TradingCalendar,
};

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn setup() -> (TradingCalendar, RateCurve) {
    let cal = TradingCalendar::weekdays(day(2010, 1, 1), day(2012, 12, 31));
    let mut rates = RateCurve::new();
    rates.insert(day(2010, 1, 1), [0.01, 0.015, 0.02, 0.025], false).unwrap();
    (cal, rates)
}

fn quote_strategy() -> impl Strategy<Value = OptionQuote> {
    (0i64..40, 1i64..420, 50.0f64..150.0, any::<bool>(), 0.0f64..60.0, 90.0f64..110.0).prop_map(
        |(q, dte, strike, call, price, underlying)| {
            let quote_date = day(2011, 1, 3) + chrono::Duration::days(q);
            OptionQuote {
                quote_date,
                expiry: quote_date + chrono::Duration::days(dte),
                strike: strike.round(),
                kind: if call { OptionKind::Call } else { OptionKind::Put },
                price: (price * 100.0).round() / 100.0,
                underlying: underlying.round(),
            }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filtering_is_idempotent_and_partitions(quotes in prop::collection::vec(quote_strategy(), 0..60)) {
        let (cal, rates) = setup();
        let cfg = FilterConfig::default();
        let first = filter_chain(&quotes, &cal, &rates, &cfg);
        prop_assert_eq!(first.kept.len() + first.rejections.len(), quotes.len());
        let second = filter_chain(&first.kept, &cal, &rates, &cfg);
        prop_assert_eq!(&second.kept, &first.kept);
        prop_assert!(second.rejections.is_empty());
        for q in &first.kept {
            prop_assert!(q.price >= cfg.tick_threshold);
            prop_assert!(first.slice(q.quote_date, q.expiry).is_some());
        }
    }

    #[test]
    fn chain_csv_round_trips(quotes in prop::collection::vec(quote_strategy(), 0..30)) {
        let mut buf = Vec::new();
        write_chain(&quotes, &mut buf).unwrap();
        prop_assert_eq!(read_chain(buf.as_slice()).unwrap(), quotes);
    }

    #[test]
    fn tenor_is_monotone(a in 1usize..400, b in 1usize..400) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!((tenor_for_days(lo) as usize) <= (tenor_for_days(hi) as usize));
    }
}

#[test]
fn report_totals_cover_every_record() {
    let base = OptionQuote {
        quote_date: day(2011, 1, 5),
        expiry: day(2011, 3, 18),
        strike: 100.0,
        kind: OptionKind::Call,
        price: 4.0,
        underlying: 100.0,
    };
    let records: Vec<EvaluationRecord> = (0..12)
        .map(|k| EvaluationRecord {
            quote: OptionQuote { strike: 80.0 + 4.0 * k as f64, ..base },
            trading_days: 10 + 15 * (k % 4),
            s_adj: 100.0,
            rate_per_step: 0.0,
            model_price: 4.0 + 0.1 * k as f64,
            bs_price: 4.0 - 0.2,
            market_iv: None,
            model_iv: None,
        })
        .collect();
    let report = bucket_and_report(&records);
    let total = report.total().unwrap();
    assert_eq!(total.count, 12);
    let per_cell: usize = report.cells.iter().filter(|c| c.moneyness != "All" && c.dtm != "All").map(|c| c.count).sum();
    assert_eq!(per_cell, 12);
    assert!((total.rmse_bs - 0.2).abs() < 1e-12);
}
