use serde_json::Value;

use secrecy_region::RatePair;

pub const CSV_HEADER: &str = "alpha,order,R1,R2,R1_stderr,R2_stderr,solver,iterations";

/// `x` rounded to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn fmt9(x: f64) -> String {
    format!("{}", round9(x))
}

pub fn csv_row(p: &RatePair, solver: &str) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        fmt9(p.alpha),
        p.order,
        fmt9(p.r1),
        fmt9(p.r2),
        fmt9(p.mc_std_err[0]),
        fmt9(p.mc_std_err[1]),
        solver,
        p.iterations
    )
}

/// Rounds every number in a JSON tree to 9 significant digits. Integers are
/// left alone.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round9).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn to_json(v: impl serde::Serialize) -> String {
    let mut value = serde_json::to_value(v).expect("output serializes");
    round_json(&mut value);
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

pub fn to_json_line(v: impl serde::Serialize) -> String {
    let mut value = serde_json::to_value(v).expect("output serializes");
    round_json(&mut value);
    let mut s = serde_json::to_string(&value).expect("value serializes");
    s.push('\n');
    s
}
