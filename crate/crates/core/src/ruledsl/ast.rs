use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueType {
    Scalar,
    Vector,
}

impl ValueType {
    pub fn join(self, other: ValueType) -> ValueType {
        if self == ValueType::Vector || other == ValueType::Vector {
            ValueType::Vector
        } else {
            ValueType::Scalar
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Rand,
    Randn,
    Bincross,
    Clamp,
    Abs,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Rand,
        Func::Randn,
        Func::Bincross,
        Func::Clamp,
        Func::Abs,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Rand => "rand",
            Func::Randn => "randn",
            Func::Bincross => "bincross",
            Func::Clamp => "clamp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Rand | Func::Randn => 0,
            Func::Clamp | Func::Abs => 1,
            Func::Min | Func::Max => 2,
            Func::Bincross => 3,
        }
    }
}

pub const VECTOR_BUILTINS: [&str; 8] = ["x", "best", "r1", "r2", "r3", "mean", "lb", "ub"];
pub const SCALAR_BUILTINS: [&str; 3] = ["cv", "f", "dim"];

pub fn builtin_type(name: &str) -> Option<ValueType> {
    if VECTOR_BUILTINS.contains(&name) {
        Some(ValueType::Vector)
    } else if SCALAR_BUILTINS.contains(&name) {
        Some(ValueType::Scalar)
    } else {
        None
    }
}

pub fn is_reserved(name: &str) -> bool {
    builtin_type(name).is_some() || Func::from_name(name).is_some()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assign {
    pub target: String,
    pub expr: Expr,
    pub ty: ValueType,
}

/// A parsed and type-checked rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleAst {
    pub params: Vec<Param>,
    pub statements: Vec<Assign>,
}

impl RuleAst {
    /// Canonical textual form.
    pub fn canonical_text(&self) -> String {
        super::print(self)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}
