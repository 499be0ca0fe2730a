use std::fmt;
use std::sync::Arc;

use super::ast::Type;

/// Reference to a heap object. Ids are dense and allocation-ordered.
#[derive(Debug, Clone)]
pub struct ObjRef {
    pub id: usize,
    pub class: Arc<str>,
}

impl PartialEq for ObjRef {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for ObjRef {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Null,
    Int(i64),
    Bool(bool),
    Str(Arc<str>),
    Obj(ObjRef),
}

impl Value {
    /// Field and local initial value for a declared type.
    pub fn default_for(ty: &Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str(Arc::from("")),
            Type::Class(_) | Type::Void | Type::Null => Value::Null,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(s),
            Value::Obj(o) => write!(f, "{}#{}", o.class, o.id),
        }
    }
}
