//! Bearer token verification against configured issuers.

use std::collections::{BTreeSet, HashMap};

use jsonwebtoken::errors::ErrorKind;
use jsonwebtoken::{Algorithm, DecodingKey, EncodingKey, Header, Validation};
use proofbench_core::Role;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::IssuerConfig;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthError {
    #[error("missing bearer token")]
    Missing,
    #[error("malformed token")]
    Malformed,
    #[error("token expired")]
    Expired,
    #[error("token signature does not verify")]
    BadSignature,
    #[error("issuer `{0}` is not trusted")]
    UnknownIssuer(String),
    #[error("token carries no recognized role")]
    NoRoles,
}

impl AuthError {
    /// 401 for failed authentication, 403 for an identity without roles.
    pub fn status(&self) -> u16 {
        match self {
            AuthError::NoRoles => 403,
            _ => 401,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            AuthError::Missing => "unauthenticated",
            AuthError::Malformed => "malformed-token",
            AuthError::Expired => "token-expired",
            AuthError::BadSignature => "bad-signature",
            AuthError::UnknownIssuer(_) => "unknown-issuer",
            AuthError::NoRoles => "no-roles",
        }
    }
}

/// An authenticated caller. Built only from a verified token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Principal {
    pub user_id: String,
    pub roles: BTreeSet<Role>,
    pub issuer: String,
    #[serde(skip)]
    pub username: String,
}

impl Principal {
    /// The most privileged role held.
    pub fn role(&self) -> Role {
        *self.roles.iter().next_back().expect("principals always hold a role")
    }

    pub fn is(&self, role: Role) -> bool {
        self.role().at_least(role)
    }
}

/// Opaque, stable user id for an (issuer, subject) pair.
pub fn user_id(issuer: &str, subject: &str) -> String {
    let digest =
        Sha256::new().chain_update(issuer.as_bytes()).chain_update([0u8]).chain_update(subject.as_bytes()).finalize();
    format!("u-{}", &hex::encode(digest)[..24])
}

#[derive(Deserialize)]
struct IssuerOnly {
    iss: Option<String>,
}

#[derive(Deserialize)]
struct Claims {
    iss: String,
    sub: String,
    #[serde(default)]
    preferred_username: Option<String>,
    #[serde(flatten)]
    rest: HashMap<String, Value>,
}

struct Key {
    kid: Option<String>,
    key: DecodingKey,
}

struct Issuer {
    keys: Vec<Key>,
    roles_claim: String,
}

pub struct TokenVerifier {
    issuers: HashMap<String, Issuer>,
    leeway: u64,
}

impl std::fmt::Debug for TokenVerifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenVerifier").field("issuers", &self.issuers.keys().collect::<Vec<_>>()).finish()
    }
}

impl TokenVerifier {
    pub fn new(issuers: &[IssuerConfig]) -> Result<Self, String> {
        let mut map = HashMap::new();
        for cfg in issuers {
            let keys = cfg
                .jwks
                .keys
                .iter()
                .map(|jwk| {
                    DecodingKey::from_jwk(jwk)
                        .map(|key| Key { kid: jwk.common.key_id.clone(), key })
                        .map_err(|e| format!("{}: {e}", cfg.issuer))
                })
                .collect::<Result<Vec<_>, _>>()?;
            map.insert(cfg.issuer.clone(), Issuer { keys, roles_claim: cfg.roles_claim.clone() });
        }
        Ok(TokenVerifier { issuers: map, leeway: 5 })
    }

    pub fn verify(&self, raw: &str) -> Result<Principal, AuthError> {
        let header = jsonwebtoken::decode_header(raw).map_err(|_| AuthError::Malformed)?;
        let unverified: IssuerOnly =
            jsonwebtoken::dangerous::insecure_decode_claims(raw).map_err(|_| AuthError::Malformed)?;
        let iss = unverified.iss.ok_or(AuthError::Malformed)?;
        let issuer = self.issuers.get(&iss).ok_or_else(|| AuthError::UnknownIssuer(iss.clone()))?;
        let candidates = issuer.keys.iter().filter(|k| header.kid.is_none() || k.kid.is_none() || k.kid == header.kid);
        let mut outcome = Err(AuthError::BadSignature);
        for key in candidates {
            if key.key.family() != header.alg.family() {
                continue;
            }
            let mut validation = Validation::new(header.alg);
            validation.set_issuer(&[&iss]);
            validation.set_required_spec_claims(&["exp", "iss", "sub"]);
            validation.validate_aud = false;
            validation.leeway = self.leeway;
            match jsonwebtoken::decode::<Claims>(raw, &key.key, &validation) {
                Ok(data) => {
                    outcome = Ok(data.claims);
                    break;
                }
                Err(e) => {
                    outcome = Err(match e.kind() {
                        ErrorKind::ExpiredSignature => AuthError::Expired,
                        ErrorKind::InvalidSignature => AuthError::BadSignature,
                        ErrorKind::InvalidIssuer => AuthError::UnknownIssuer(iss.clone()),
                        _ => AuthError::Malformed,
                    });
                    if !matches!(outcome, Err(AuthError::BadSignature)) {
                        break;
                    }
                }
            }
        }
        let claims = outcome?;
        let roles: BTreeSet<Role> = match claims.rest.get(&issuer.roles_claim) {
            Some(Value::Array(items)) => items.iter().filter_map(|v| v.as_str()?.parse().ok()).collect(),
            Some(Value::String(s)) => s.split([' ', ',']).filter_map(|r| r.parse().ok()).collect(),
            _ => BTreeSet::new(),
        };
        if roles.is_empty() {
            return Err(AuthError::NoRoles);
        }
        Ok(Principal {
            user_id: user_id(&claims.iss, &claims.sub),
            username: claims.preferred_username.unwrap_or_else(|| claims.sub.clone()),
            roles,
            issuer: claims.iss,
        })
    }
}

/// Signs tokens with an Ed25519 key; for local development and tests.
pub struct TokenMinter {
    issuer: String,
    kid: Option<String>,
    key: EncodingKey,
}

#[derive(Serialize)]
struct MintClaims<'a> {
    iss: &'a str,
    sub: &'a str,
    exp: i64,
    iat: i64,
    preferred_username: &'a str,
    roles: Vec<&'a str>,
}

impl TokenMinter {
    pub fn from_ed_pem(issuer: &str, kid: Option<&str>, pem: &[u8]) -> Result<Self, String> {
        let key = EncodingKey::from_ed_pem(pem).map_err(|e| e.to_string())?;
        Ok(TokenMinter { issuer: issuer.into(), kid: kid.map(String::from), key })
    }

    /// A token for `subject` valid for `ttl_secs` (negative for an expired one).
    pub fn mint(&self, subject: &str, username: &str, roles: &[Role], ttl_secs: i64) -> String {
        let now = chrono::Utc::now().timestamp();
        let mut header = Header::new(Algorithm::EdDSA);
        header.kid = self.kid.clone();
        let claims = MintClaims {
            iss: &self.issuer,
            sub: subject,
            exp: now + ttl_secs,
            iat: now,
            preferred_username: username,
            roles: roles.iter().map(|r| r.as_str()).collect(),
        };
        jsonwebtoken::encode(&header, &claims, &self.key).expect("Ed25519 signing does not fail")
    }
}
