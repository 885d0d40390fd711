//! Endpoint permissions. Roles are cumulative: teacher includes student,
//! admin includes teacher. Resource checks (enrollment, ownership) come
//! after this gate.

use proofbench_core::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Health,
    Me,
    ListCourses,
    CreateCourse,
    GetCourse,
    UpdateCourse,
    EnrollCourse,
    GetTutorial,
    UploadTutorial,
    SubmitCheck,
    GetCheck,
    ResetProgress,
    ListRules,
    ListSymbols,
    Tokenize,
    Complete,
    PoolStatus,
    PoolScale,
    ListUsers,
    DeleteUser,
    Export,
    Stream,
}

impl Endpoint {
    pub const ALL: [Endpoint; 22] = [
        Endpoint::Health,
        Endpoint::Me,
        Endpoint::ListCourses,
        Endpoint::CreateCourse,
        Endpoint::GetCourse,
        Endpoint::UpdateCourse,
        Endpoint::EnrollCourse,
        Endpoint::GetTutorial,
        Endpoint::UploadTutorial,
        Endpoint::SubmitCheck,
        Endpoint::GetCheck,
        Endpoint::ResetProgress,
        Endpoint::ListRules,
        Endpoint::ListSymbols,
        Endpoint::Tokenize,
        Endpoint::Complete,
        Endpoint::PoolStatus,
        Endpoint::PoolScale,
        Endpoint::ListUsers,
        Endpoint::DeleteUser,
        Endpoint::Export,
        Endpoint::Stream,
    ];

    /// Method and path template under `/v1`.
    pub fn route(self) -> (&'static str, &'static str) {
        match self {
            Endpoint::Health => ("GET", "/health"),
            Endpoint::Me => ("GET", "/me"),
            Endpoint::ListCourses => ("GET", "/courses"),
            Endpoint::CreateCourse => ("POST", "/courses"),
            Endpoint::GetCourse => ("GET", "/courses/{id}"),
            Endpoint::UpdateCourse => ("PUT", "/courses/{id}"),
            Endpoint::EnrollCourse => ("POST", "/courses/{id}/enroll"),
            Endpoint::GetTutorial => ("GET", "/tutorials/{id}"),
            Endpoint::UploadTutorial => ("POST", "/tutorials"),
            Endpoint::SubmitCheck => ("POST", "/checks"),
            Endpoint::GetCheck => ("GET", "/checks/{id}"),
            Endpoint::ResetProgress => ("POST", "/progress/{id}/reset"),
            Endpoint::ListRules => ("GET", "/rules"),
            Endpoint::ListSymbols => ("GET", "/symbols"),
            Endpoint::Tokenize => ("POST", "/tokenize"),
            Endpoint::Complete => ("POST", "/complete"),
            Endpoint::PoolStatus => ("GET", "/admin/pool"),
            Endpoint::PoolScale => ("POST", "/admin/pool/scale"),
            Endpoint::ListUsers => ("GET", "/admin/users"),
            Endpoint::DeleteUser => ("DELETE", "/admin/users/{id}"),
            Endpoint::Export => ("GET", "/export"),
            Endpoint::Stream => ("GET", "/stream"),
        }
    }

    /// Least role admitted; `None` means open to anonymous callers.
    pub fn minimum(self) -> Option<Role> {
        use Endpoint::*;
        match self {
            Health => None,
            Me | ListCourses | GetCourse | GetTutorial | SubmitCheck | GetCheck | ResetProgress | ListRules
            | ListSymbols | Tokenize | Complete | Stream => Some(Role::Student),
            CreateCourse | UpdateCourse | EnrollCourse | UploadTutorial | Export => Some(Role::Teacher),
            PoolStatus | PoolScale | ListUsers | DeleteUser => Some(Role::Admin),
        }
    }

    pub fn allows(self, role: Option<Role>) -> bool {
        match (self.minimum(), role) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(min), Some(r)) => r.at_least(min),
        }
    }
}
