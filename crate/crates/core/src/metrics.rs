//! Confusion counts and the detector quality ratios derived from them.

use std::fmt;

use num_rational::Ratio;

pub type Rational = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    /// `None` wherever the denominator is zero.
    pub precision: Option<Rational>,
    pub recall: Option<Rational>,
    pub accuracy: Option<Rational>,
    pub f1: Option<Rational>,
    pub dor: Option<Rational>,
    pub lr_plus: Option<Rational>,
    pub lr_minus: Option<Rational>,
    pub tpr: Option<Rational>,
    pub fpr: Option<Rational>,
    pub fnr: Option<Rational>,
    pub tnr: Option<Rational>,
    /// Kernels analyzed without bailing out on an unsupported pragma.
    pub coverage: u64,
}

fn ratio(n: u64, d: u64) -> Option<Rational> {
    (d != 0).then(|| Ratio::new(n, d))
}

fn div(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(a), Some(b)) if *b.numer() != 0 => Some(a / b),
        _ => None,
    }
}

pub fn compute_metrics(tp: u64, fp: u64, tn: u64, fn_: u64) -> Metrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r != Ratio::from_integer(0) => Some(Ratio::from_integer(2) * p * r / (p + r)),
        _ => None,
    };
    let tpr = recall;
    let fpr = ratio(fp, fp + tn);
    let fnr = ratio(fn_, tp + fn_);
    let tnr = ratio(tn, tn + fp);
    let lr_plus = div(tpr, fpr);
    let lr_minus = div(fnr, tnr);
    Metrics {
        tp,
        fp,
        tn,
        fn_,
        precision,
        recall,
        accuracy: ratio(tp + tn, tp + fp + tn + fn_),
        f1,
        dor: div(lr_plus, lr_minus),
        lr_plus,
        lr_minus,
        tpr,
        fpr,
        fnr,
        tnr,
        coverage: tp + fp + tn + fn_,
    }
}

pub struct Shown(pub Option<Rational>);

impl fmt::Display for Shown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("n/a"),
            Some(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{} ({:.3})", r.numer(), r.denom(), *r.numer() as f64 / *r.denom() as f64),
        }
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "coverage  : {}", self.coverage)?;
        writeln!(f, "TP={} FP={} TN={} FN={}", self.tp, self.fp, self.tn, self.fn_)?;
        let rows = [
            ("precision", self.precision),
            ("recall", self.recall),
            ("accuracy", self.accuracy),
            ("F1", self.f1),
            ("TPR", self.tpr),
            ("FPR", self.fpr),
            ("FNR", self.fnr),
            ("TNR", self.tnr),
            ("LR+", self.lr_plus),
            ("LR-", self.lr_minus),
            ("DOR", self.dor),
        ];
        for (name, v) in rows {
            writeln!(f, "{name:<10}: {}", Shown(v))?;
        }
        Ok(())
    }
}
