use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("duplicate concept `{0}`")]
    DuplicateConcept(String),

    #[error("invalid concept id `{0}`")]
    InvalidConceptId(String),

    #[error("concept `{concept}` declares undeclared parent `{parent}`")]
    UndeclaredParent { concept: String, parent: String },

    #[error("taxonomy is cyclic through concept `{0}`")]
    TaxonomyCycle(String),

    #[error("duplicate service `{0}`")]
    DuplicateService(String),

    #[error("invalid service id `{0}`")]
    InvalidServiceId(String),

    #[error("service `{service}` references unknown concept `{concept}`")]
    ServiceConcept { service: String, concept: String },

    #[error("request has no goal outputs")]
    EmptyGoal,

    #[error("service `{0}` is not part of the graph")]
    UnknownGraphService(String),

    #[error("concept `{0}` is not part of the graph")]
    UnknownGraphConcept(String),

    #[error("graph has no sink service")]
    MissingSink,

    #[error("action resolves no concept of the state")]
    InapplicableAction,

    #[error("composition references unknown service `{0}`")]
    UnknownCompositionService(String),

    #[error("composition precedence is cyclic at `{0}`")]
    CyclicComposition(String),

    #[error("abstract interface `{0}` has no members")]
    EmptyInterface(String),
}
