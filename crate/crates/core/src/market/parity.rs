use super::quotes::{OptionKind, OptionQuote};

/// Index level net of the dividends paid before expiry, backed out from
/// put-call parity at one quote date and expiry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityAdjustment {
    pub s_adj: f64,
    /// Strike of the pair used, `None` when no pair exists.
    pub strike: Option<f64>,
    /// Set when no put-call pair was available and the raw index is used.
    pub fallback: bool,
}

/// `S_adj = C - P + K e^{-r tau}` from the pair with strike closest to
/// `index`; ties go to the lower strike. Without any pair the raw index is
/// returned with `fallback` set. `quotes` should share one quote date and
/// expiry; `r_annual` is continuously compounded over `tau_years`.
pub fn dividend_adjusted_index(quotes: &[OptionQuote], index: f64, r_annual: f64, tau_years: f64) -> ParityAdjustment {
    let mut best: Option<(f64, f64, f64)> = None;
    for c in quotes.iter().filter(|q| q.kind == OptionKind::Call) {
        let Some(p) = quotes.iter().find(|q| q.kind == OptionKind::Put && q.strike == c.strike) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((k, _, _)) => {
                let (dn, db) = ((c.strike - index).abs(), (k - index).abs());
                dn < db || (dn == db && c.strike < k)
            }
        };
        if better {
            best = Some((c.strike, c.price, p.price));
        }
    }
    match best {
        Some((k, c, p)) => ParityAdjustment { s_adj: c - p + k * (-r_annual * tau_years).exp(), strike: Some(k), fallback: false },
        None => ParityAdjustment { s_adj: index, strike: None, fallback: true },
    }
}
