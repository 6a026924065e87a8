use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use super::parser::{BinOp, CmpOp, Expr, UnaryOp};

/// Bounds that make evaluation total.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResourceCaps {
    /// Largest admissible `|exponent|` (or exponent numerator/denominator) for `**`.
    pub max_exponent: u64,
    /// Largest admissible number of decimal digits in any integer, numerator or denominator.
    pub max_digits: u32,
    /// Largest number of expression nodes evaluated.
    pub max_steps: u64,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        Self { max_exponent: 4096, max_digits: 4096, max_steps: 100_000 }
    }
}

/// Run-time value. `Rat` plays the role of a float: it is what `/` produces
/// and it never takes part in shifts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Rat(BigRational),
}

impl Value {
    fn into_int(self) -> Option<BigInt> {
        match self {
            Value::Bool(b) => Some(BigInt::from(b as u8)),
            Value::Int(v) => Some(v),
            Value::Rat(_) => None,
        }
    }

    fn to_rat(&self) -> BigRational {
        match self {
            Value::Bool(b) => BigRational::from_integer(BigInt::from(*b as u8)),
            Value::Int(v) => BigRational::from_integer(v.clone()),
            Value::Rat(r) => r.clone(),
        }
    }

    fn is_rat(&self) -> bool {
        matches!(self, Value::Rat(_))
    }

    fn is_zero(&self) -> bool {
        match self {
            Value::Bool(b) => !*b,
            Value::Int(v) => v.is_zero(),
            Value::Rat(r) => r.is_zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Runtime(String),
    ResourceCap(String),
}

/// Side information gathered during one evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub steps: u64,
    /// Some rational value left the range a binary64 float can hold (overflow
    /// above 2^1024 or underflow below 2^-1074).
    pub float_range_exceeded: bool,
}

/// Evaluator with precomputed magnitude limit; reusable across expressions.
#[derive(Clone, Debug)]
pub struct Evaluator {
    caps: ResourceCaps,
    limit: BigInt,
    safe_bits: u64,
}

const FLOAT_MAX_BITS: u64 = 1024;
const FLOAT_MIN_BITS: u64 = 1075;

impl Evaluator {
    pub fn new(caps: ResourceCaps) -> Self {
        let limit = Pow::pow(BigInt::from(10u32), caps.max_digits);
        let safe_bits = (caps.max_digits as f64 * std::f64::consts::LOG2_10).floor() as u64;
        Self { caps, limit, safe_bits }
    }

    pub fn caps(&self) -> ResourceCaps {
        self.caps
    }

    pub fn evaluate(&self, expr: &Expr) -> (Result<Value, EvalError>, EvalStats) {
        let mut run = Run { ev: self, stats: EvalStats::default() };
        let result = run.eval(expr);
        (result, run.stats)
    }

    fn int_fits(&self, v: &BigInt) -> bool {
        let bits = v.bits();
        bits <= self.safe_bits || (bits <= self.safe_bits + 4 && v.abs() < self.limit)
    }
}

struct Run<'a> {
    ev: &'a Evaluator,
    stats: EvalStats,
}

fn runtime<T>(msg: &str) -> Result<T, EvalError> {
    Err(EvalError::Runtime(msg.to_string()))
}

fn capped<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::ResourceCap(msg.into()))
}

impl Run<'_> {
    fn tick(&mut self) -> Result<(), EvalError> {
        self.stats.steps += 1;
        if self.stats.steps > self.ev.caps.max_steps {
            return capped("step budget exhausted");
        }
        Ok(())
    }

    fn int(&mut self, v: BigInt) -> Result<Value, EvalError> {
        if !self.ev.int_fits(&v) {
            return capped("integer magnitude exceeds digit cap");
        }
        Ok(Value::Int(v))
    }

    fn rat(&mut self, r: BigRational) -> Result<Value, EvalError> {
        if !self.ev.int_fits(r.numer()) || !self.ev.int_fits(r.denom()) {
            return capped("rational magnitude exceeds digit cap");
        }
        if !r.is_zero() {
            let (n, d) = (r.numer().bits(), r.denom().bits());
            if n > d + FLOAT_MAX_BITS || d > n + FLOAT_MIN_BITS {
                self.stats.float_range_exceeded = true;
            }
        }
        Ok(Value::Rat(r))
    }

    /// Converts an operand that is about to mix with a rational.
    fn promote(&mut self, v: &Value) -> BigRational {
        if let Value::Int(i) = v {
            if i.bits() > FLOAT_MAX_BITS {
                self.stats.float_range_exceeded = true;
            }
        }
        v.to_rat()
    }

    fn eval(&mut self, expr: &Expr) -> Result<Value, EvalError> {
        self.tick()?;
        match expr {
            Expr::Int(v) => self.int(v.clone()),
            Expr::Unary(op, operand) => {
                let v = self.eval(operand)?;
                match (op, v) {
                    (UnaryOp::Plus, Value::Bool(b)) => Ok(Value::Int(BigInt::from(b as u8))),
                    (UnaryOp::Plus, v) => Ok(v),
                    (UnaryOp::Minus, Value::Rat(r)) => Ok(Value::Rat(-r)),
                    (UnaryOp::Minus, v) => Ok(Value::Int(-v.into_int().expect("integral"))),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                self.binary(*op, a, b)
            }
            Expr::Compare(first, rest) => {
                let mut left = self.eval(first)?;
                for (op, operand) in rest {
                    let right = self.eval(operand)?;
                    if !compare(*op, &left, &right) {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Ok(Value::Bool(true))
            }
        }
    }

    fn binary(&mut self, op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                if a.is_rat() || b.is_rat() {
                    let (x, y) = (self.promote(&a), self.promote(&b));
                    let r = match op {
                        BinOp::Add => x + y,
                        BinOp::Sub => x - y,
                        _ => x * y,
                    };
                    self.rat(r)
                } else {
                    let (x, y) = (a.into_int().unwrap(), b.into_int().unwrap());
                    let r = match op {
                        BinOp::Add => x + y,
                        BinOp::Sub => x - y,
                        _ => x * y,
                    };
                    self.int(r)
                }
            }
            BinOp::Div => {
                if b.is_zero() {
                    return runtime("division by zero");
                }
                let (x, y) = (self.promote(&a), self.promote(&b));
                self.rat(x / y)
            }
            BinOp::FloorDiv => {
                if b.is_zero() {
                    return runtime("integer division or modulo by zero");
                }
                if a.is_rat() || b.is_rat() {
                    let (x, y) = (self.promote(&a), self.promote(&b));
                    self.rat((x / y).floor())
                } else {
                    let (x, y) = (a.into_int().unwrap(), b.into_int().unwrap());
                    self.int(x.div_floor(&y))
                }
            }
            BinOp::Pow => self.power(a, b),
            BinOp::Shl | BinOp::Shr => {
                let (Some(x), Some(n)) = (a.into_int(), b.into_int()) else {
                    return runtime("unsupported operand type for shift");
                };
                if n.is_negative() {
                    return runtime("negative shift count");
                }
                if op == BinOp::Shr {
                    return match n.to_u64() {
                        Some(k) if k < x.bits() + 1 => self.int(x >> k),
                        _ => Ok(Value::Int(if x.is_negative() { -BigInt::one() } else { BigInt::zero() })),
                    };
                }
                if x.is_zero() {
                    return Ok(Value::Int(x));
                }
                match n.to_u64() {
                    Some(k) if k <= self.ev.safe_bits + 1 => self.int(x << k),
                    _ => capped("left shift result exceeds digit cap"),
                }
            }
        }
    }

    fn power(&mut self, base: Value, exponent: Value) -> Result<Value, EvalError> {
        let float_result = base.is_rat() || exponent.is_rat();
        let exponent = match exponent {
            Value::Rat(r) if !r.is_integer() => return self.rational_power(base, r),
            Value::Rat(r) => r.to_integer(),
            other => other.into_int().unwrap(),
        };
        let magnitude = match exponent.abs().to_u64() {
            Some(m) if m <= self.ev.caps.max_exponent => m,
            _ => return capped("exponent exceeds cap"),
        };
        let negative = exponent.is_negative();
        if negative && base.is_zero() {
            return runtime("zero to a negative power");
        }
        if !float_result && !negative {
            let b = base.into_int().unwrap();
            self.check_power_size(&b, magnitude)?;
            return self.int(Pow::pow(&b, magnitude));
        }
        let base = self.promote(&base);
        self.check_power_size(base.numer(), magnitude)?;
        self.check_power_size(base.denom(), magnitude)?;
        let mut r = Pow::pow(&base, magnitude);
        if negative {
            r = r.recip();
        }
        self.rat(r)
    }

    fn check_power_size(&self, base: &BigInt, exponent: u64) -> Result<(), EvalError> {
        let bits = base.bits();
        if bits > 1 && (bits - 1).saturating_mul(exponent) > self.ev.safe_bits + 1 {
            return capped("power result exceeds digit cap");
        }
        Ok(())
    }

    /// `base ** (p/q)` with `q > 1`. Only exact results are representable.
    fn rational_power(&mut self, base: Value, exponent: BigRational) -> Result<Value, EvalError> {
        let base = self.promote(&base);
        if base.is_zero() {
            return if exponent.is_negative() {
                runtime("zero to a negative power")
            } else {
                Ok(Value::Rat(base))
            };
        }
        if base.is_negative() {
            return capped("fractional power of a negative number is not a real number");
        }
        let cap = self.ev.caps.max_exponent;
        let (p, q) = match (exponent.numer().abs().to_u64(), exponent.denom().to_u64()) {
            (Some(p), Some(q)) if p <= cap && q <= cap => (p, q),
            _ => return capped("exponent exceeds cap"),
        };
        let root = |v: &BigInt| -> Option<BigInt> {
            let r = v.nth_root(q as u32);
            (Pow::pow(&r, q) == *v).then_some(r)
        };
        let (Some(n), Some(d)) = (root(base.numer()), root(base.denom())) else {
            return capped("irrational power is not representable");
        };
        self.check_power_size(&n, p)?;
        self.check_power_size(&d, p)?;
        let mut r = Pow::pow(BigRational::new(n, d), p);
        if exponent.is_negative() {
            r = r.recip();
        }
        self.rat(r)
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> bool {
    let ord = match (a, b) {
        (Value::Rat(_), _) | (_, Value::Rat(_)) => a.to_rat().cmp(&b.to_rat()),
        _ => {
            let x = a.clone().into_int().unwrap();
            let y = b.clone().into_int().unwrap();
            x.cmp(&y)
        }
    };
    match op {
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
    }
}

impl Value {
    /// Integer value if the result is integral (booleans included).
    pub fn as_integer(&self) -> Option<BigInt> {
        match self {
            Value::Rat(r) if r.is_integer() => Some(r.to_integer()),
            Value::Rat(_) => None,
            v => v.clone().into_int(),
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            Value::Bool(false) => Sign::NoSign,
            Value::Bool(true) => Sign::Plus,
            Value::Int(v) => v.sign(),
            Value::Rat(r) => r.numer().sign(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parser::parse;
    use crate::expr::token::tokenize;

    fn run(text: &str) -> Result<Value, EvalError> {
        let tree = parse(&tokenize(text).unwrap()).unwrap();
        Evaluator::new(ResourceCaps::default()).evaluate(&tree).0
    }

    fn int(text: &str) -> i64 {
        run(text).unwrap().as_integer().unwrap().to_i64().unwrap()
    }

    fn rat(n: i64, d: i64) -> Value {
        Value::Rat(BigRational::new(n.into(), d.into()))
    }

    #[test]
    fn precedence() {
        assert_eq!(int("1+2*3"), 7);
        assert_eq!(int("(1+2)*3"), 9);
        assert_eq!(int("-2**2"), -4);
        assert_eq!(int("2**3**2"), 512);
        assert_eq!(int("1<<2+1"), 8);
        assert_eq!(int("7-3-2"), 2);
    }

    #[test]
    fn division_is_exact() {
        assert_eq!(run("1/3").unwrap(), rat(1, 3));
        assert_eq!(run("4/2").unwrap(), rat(2, 1));
        assert_eq!(run("2**-1").unwrap(), rat(1, 2));
        assert_eq!(run("1/3*3==1").unwrap(), Value::Bool(true));
    }

    #[test]
    fn floor_division() {
        assert_eq!(int("7//2"), 3);
        assert_eq!(int("-7//2"), -4);
        assert_eq!(run("7/2//1").unwrap(), rat(3, 1));
        assert_eq!(run("-7/2//1").unwrap(), rat(-4, 1));
    }

    #[test]
    fn zero_division() {
        assert!(matches!(run("1/0"), Err(EvalError::Runtime(_))));
        assert!(matches!(run("1//(1-1)"), Err(EvalError::Runtime(_))));
        assert!(matches!(run("0**-1"), Err(EvalError::Runtime(_))));
        assert!(matches!(run("1/(1>2)"), Err(EvalError::Runtime(_))));
    }

    #[test]
    fn booleans_coerce() {
        assert_eq!(int("(1<2)*3"), 3);
        assert_eq!(int("(1<2)+(2<3)"), 2);
        assert_eq!(int("(1<2)<<3"), 8);
        assert_eq!(int("-(1<2)"), -1);
    }

    #[test]
    fn chained_comparisons_short_circuit() {
        assert_eq!(run("1<2<3").unwrap(), Value::Bool(true));
        assert_eq!(run("1<3<2").unwrap(), Value::Bool(false));
        assert_eq!(run("2>3>1/0").unwrap(), Value::Bool(false));
        assert!(run("3>2>1/0").is_err());
        assert_eq!(run("1==1!=2").unwrap(), Value::Bool(true));
    }

    #[test]
    fn shifts() {
        assert_eq!(int("5>>1"), 2);
        assert_eq!(int("-5>>1"), -3);
        assert_eq!(int("-1>>99999999999999999999"), -1);
        assert_eq!(int("3>>99999999999999999999"), 0);
        assert_eq!(int("0<<99999999999999999999"), 0);
        assert!(matches!(run("1<<-1"), Err(EvalError::Runtime(_))));
        assert!(matches!(run("1/2<<1"), Err(EvalError::Runtime(_))));
        assert!(matches!(run("1<<(2/1)"), Err(EvalError::Runtime(_))));
        assert!(matches!(run("1<<99999"), Err(EvalError::ResourceCap(_))));
    }

    #[test]
    fn power_caps() {
        assert!(matches!(run("9**9**9"), Err(EvalError::ResourceCap(_))));
        assert!(matches!(run("2**4097"), Err(EvalError::ResourceCap(_))));
        assert!(matches!(run("10**4096"), Err(EvalError::ResourceCap(_))));
        assert!(run("10**4095").is_ok());
        assert!(run("2**4096").is_ok());
        assert!(matches!(run("99**4000"), Err(EvalError::ResourceCap(_))));
    }

    #[test]
    fn fractional_exponents() {
        assert_eq!(run("4**(1/2)").unwrap(), rat(2, 1));
        assert_eq!(run("(8/27)**(2/3)").unwrap(), rat(4, 9));
        assert_eq!(run("4**(-1/2)").unwrap(), rat(1, 2));
        assert!(matches!(run("2**(1/2)"), Err(EvalError::ResourceCap(_))));
        assert!(matches!(run("(-8)**(1/3)"), Err(EvalError::ResourceCap(_))));
        assert!(matches!(run("0**(-1/2)"), Err(EvalError::Runtime(_))));
        assert_eq!(run("0**(1/2)").unwrap(), rat(0, 1));
        assert_eq!(run("2**(4/2)").unwrap(), rat(4, 1));
    }

    #[test]
    fn float_range_flag() {
        let tree = parse(&tokenize("2**1100/1").unwrap()).unwrap();
        let (result, stats) = Evaluator::new(ResourceCaps::default()).evaluate(&tree);
        assert!(result.is_ok());
        assert!(stats.float_range_exceeded);
        let tree = parse(&tokenize("2**100/1").unwrap()).unwrap();
        let (_, stats) = Evaluator::new(ResourceCaps::default()).evaluate(&tree);
        assert!(!stats.float_range_exceeded);
    }

    #[test]
    fn step_budget() {
        let caps = ResourceCaps { max_steps: 5, ..ResourceCaps::default() };
        let tree = parse(&tokenize("1+1+1+1").unwrap()).unwrap();
        let (result, _) = Evaluator::new(caps).evaluate(&tree);
        assert!(matches!(result, Err(EvalError::ResourceCap(_))));
    }
}
