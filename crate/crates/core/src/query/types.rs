use std::fmt;

/// Classes of the archive object model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    Graph,
    Origin,
    OriginVisit,
    Node,
    Snapshot,
    SnapshotBranch,
    Release,
    Revision,
    Directory,
    DirectoryEntry,
    Content,
}

impl Class {
    pub const ALL: [Class; 11] = [
        Class::Graph,
        Class::Origin,
        Class::OriginVisit,
        Class::Node,
        Class::Snapshot,
        Class::SnapshotBranch,
        Class::Release,
        Class::Revision,
        Class::Directory,
        Class::DirectoryEntry,
        Class::Content,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Class::Graph => "Graph",
            Class::Origin => "Origin",
            Class::OriginVisit => "OriginVisit",
            Class::Node => "Node",
            Class::Snapshot => "Snapshot",
            Class::SnapshotBranch => "SnapshotBranch",
            Class::Release => "Release",
            Class::Revision => "Revision",
            Class::Directory => "Directory",
            Class::DirectoryEntry => "DirectoryEntry",
            Class::Content => "Content",
        }
    }

    pub fn by_name(name: &str) -> Option<Class> {
        Class::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn superclass(self) -> Option<Class> {
        match self {
            Class::Snapshot
            | Class::Release
            | Class::Revision
            | Class::Directory
            | Class::Content => Some(Class::Node),
            _ => None,
        }
    }

    pub fn is_subclass_of(self, other: Class) -> bool {
        let mut c = Some(self);
        while let Some(k) = c {
            if k == other {
                return true;
            }
            c = k.superclass();
        }
        false
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Static types. `Null` is the type of the `null` literal and conforms to
/// every type; `Any` is the top of scalar and class types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Boolean,
    Integer,
    String,
    Null,
    Any,
    Class(Class),
    Set(Box<Type>),
}

impl Type {
    pub fn set(inner: Type) -> Type {
        Type::Set(Box::new(inner))
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, Type::Set(_))
    }

    /// Element type of a collection; the type itself for scalars.
    pub fn element(&self) -> &Type {
        match self {
            Type::Set(inner) => inner,
            other => other,
        }
    }

    pub fn conforms_to(&self, other: &Type) -> bool {
        match (self, other) {
            (a, b) if a == b => true,
            (Type::Null, _) => true,
            (Type::Set(a), Type::Set(b)) => a.conforms_to(b),
            (Type::Set(_), _) | (_, Type::Set(_)) => false,
            (_, Type::Any) => true,
            (Type::Class(a), Type::Class(b)) => a.is_subclass_of(*b),
            _ => false,
        }
    }

    /// Least common supertype, if the two types are related at all.
    pub fn join(&self, other: &Type) -> Option<Type> {
        if self.conforms_to(other) {
            return Some(other.clone());
        }
        if other.conforms_to(self) {
            return Some(self.clone());
        }
        match (self, other) {
            (Type::Set(a), Type::Set(b)) => a.join(b).map(Type::set),
            (Type::Class(a), Type::Class(b))
                if a.is_subclass_of(Class::Node) && b.is_subclass_of(Class::Node) =>
            {
                Some(Type::Class(Class::Node))
            }
            (Type::Set(_), _) | (_, Type::Set(_)) => None,
            (Type::Class(_), Type::Class(_)) => Some(Type::Any),
            _ => None,
        }
    }

    /// Whether `=`/`<>` between the two types is meaningful.
    pub fn comparable_with(&self, other: &Type) -> bool {
        match self.join(other) {
            Some(Type::Any) => {
                matches!(self, Type::Class(_) | Type::Any | Type::Null)
                    && matches!(other, Type::Class(_) | Type::Any | Type::Null)
            }
            Some(_) => true,
            None => false,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Boolean => f.write_str("Boolean"),
            Type::Integer => f.write_str("Integer"),
            Type::String => f.write_str("String"),
            Type::Null => f.write_str("OclVoid"),
            Type::Any => f.write_str("OclAny"),
            Type::Class(c) => f.write_str(c.name()),
            Type::Set(inner) => write!(f, "Set({inner})"),
        }
    }
}
