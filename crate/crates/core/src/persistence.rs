//! Accounts, login tokens, saved results and the leaderboard.
//!
//! State lives in memory behind a lock and every committed change is written
//! as a full JSON snapshot to a temporary file that is then renamed over the
//! store file, so a reader of the file always sees some complete commit.
//! Passwords are kept as Argon2id PHC strings and tokens only as SHA-256
//! digests.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{OnceLock, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{
    AchievementAward, ResultKey, ResultRecord, ResultStore, SaveOutcome, UserTotals, VehicleProfile,
};

pub const MIN_PASSWORD_CHARS: usize = 8;
pub const USERNAME_CHARS: std::ops::RangeInclusive<usize> = 3..=32;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("store data is corrupt: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: &str) -> Self {
        FieldError {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AccountError {
    #[error("invalid registration: {}", .0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    Validation(Vec<FieldError>),
    #[error("invalid credentials or token")]
    Auth,
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub user_id: String,
    pub email: String,
    pub username: String,
    pub password_hash: String,
    pub vehicle: VehicleProfile,
    pub wallet: u64,
    /// Achievement id → incentive points granted.
    pub awarded: BTreeMap<String, u32>,
    /// Registration order, used to break leaderboard ties.
    pub registered_seq: u64,
}

/// A bearer token handed to the client. Only its digest is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionToken {
    pub token: String,
    pub user_id: String,
    pub issued_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub username: String,
    pub total_points: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenRecord {
    user_id: String,
    issued_at: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct StoreState {
    next_seq: u64,
    users: BTreeMap<String, UserAccount>,
    /// SHA-256 hex of the token → owner.
    tokens: BTreeMap<String, TokenRecord>,
    results: BTreeMap<ResultKey, ResultRecord>,
}

impl StoreState {
    fn find_user(&self, identifier: &str) -> Option<&UserAccount> {
        if identifier.contains('@') {
            let email = identifier.to_lowercase();
            self.users.values().find(|u| u.email == email)
        } else {
            self.users.values().find(|u| u.username == identifier)
        }
    }

    fn recompute_wallet(&mut self, user_id: &str) {
        let scores: u64 = self
            .results
            .iter()
            .filter(|(k, _)| k.user_id() == user_id)
            .map(|(_, r)| r.score)
            .sum();
        if let Some(user) = self.users.get_mut(user_id) {
            user.wallet = scores + user.awarded.values().map(|&p| u64::from(p)).sum::<u64>();
        }
    }
}

pub struct Store {
    path: Option<PathBuf>,
    state: RwLock<StoreState>,
    hasher: Argon2<'static>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl Store {
    /// Open (or create on first commit) the store file at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let state = match fs::read(&path) {
            Ok(bytes) => {
                serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt(e.to_string()))?
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => StoreState::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(Store {
            path: Some(path),
            state: RwLock::new(state),
            hasher: Argon2::default(),
        })
    }

    /// A store that never touches the disk.
    pub fn in_memory() -> Self {
        Store {
            path: None,
            state: RwLock::new(StoreState::default()),
            hasher: Argon2::default(),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Run `change` on a copy of the state, persist the copy, then publish
    /// it. On any error the visible state is unchanged.
    fn commit<T, E: From<StoreError>>(
        &self,
        change: impl FnOnce(&mut StoreState) -> Result<T, E>,
    ) -> Result<T, E> {
        let mut guard = self.state.write().unwrap_or_else(|p| p.into_inner());
        let mut next = guard.clone();
        let out = change(&mut next)?;
        if let Some(path) = &self.path {
            write_snapshot(path, &next)?;
        }
        *guard = next;
        Ok(out)
    }

    fn read<T>(&self, f: impl FnOnce(&StoreState) -> T) -> T {
        let guard = self.state.read().unwrap_or_else(|p| p.into_inner());
        f(&guard)
    }

    pub fn register(
        &self,
        email: &str,
        username: &str,
        password: &str,
    ) -> Result<String, AccountError> {
        let email = email.trim().to_lowercase();
        let mut errors = Vec::new();
        if !is_valid_email(&email) {
            errors.push(FieldError::new("email", "not a valid e-mail address"));
        }
        let name_len = username.chars().count();
        if !USERNAME_CHARS.contains(&name_len) {
            errors.push(FieldError::new("username", "must be 3 to 32 characters"));
        } else if username.contains('@') || username.chars().any(char::is_whitespace) {
            errors.push(FieldError::new(
                "username",
                "must not contain '@' or spaces",
            ));
        }
        if password.chars().count() < MIN_PASSWORD_CHARS {
            errors.push(FieldError::new("password", "must be at least 8 characters"));
        }
        self.read(|s| {
            if errors.iter().all(|e| e.field != "email")
                && s.users.values().any(|u| u.email == email)
            {
                errors.push(FieldError::new("email", "already registered"));
            }
            if errors.iter().all(|e| e.field != "username")
                && s.users.values().any(|u| u.username == username)
            {
                errors.push(FieldError::new("username", "already taken"));
            }
        });
        if !errors.is_empty() {
            return Err(AccountError::Validation(errors));
        }

        let password_hash = self.hash_password(password)?;
        let user_id = uuid::Uuid::new_v4().to_string();
        self.commit(|s| {
            // re-check under the write lock; another registration may have won
            let mut errors = Vec::new();
            if s.users.values().any(|u| u.email == email) {
                errors.push(FieldError::new("email", "already registered"));
            }
            if s.users.values().any(|u| u.username == username) {
                errors.push(FieldError::new("username", "already taken"));
            }
            if !errors.is_empty() {
                return Err(AccountError::Validation(errors));
            }
            let seq = s.next_seq;
            s.next_seq += 1;
            s.users.insert(
                user_id.clone(),
                UserAccount {
                    user_id: user_id.clone(),
                    email: email.clone(),
                    username: username.to_string(),
                    password_hash,
                    vehicle: VehicleProfile::default(),
                    wallet: 0,
                    awarded: BTreeMap::new(),
                    registered_seq: seq,
                },
            );
            Ok(())
        })?;
        Ok(user_id)
    }

    fn hash_password(&self, password: &str) -> Result<String, AccountError> {
        let salt = random_salt()?;
        self.hasher
            .hash_password(password.as_bytes(), &salt)
            .map(|h| h.to_string())
            .map_err(|e| AccountError::InvalidArgument(format!("password hashing failed: {e}")))
    }

    fn verify_password(&self, password: &str, phc: &str) -> bool {
        PasswordHash::new(phc)
            .map(|parsed| {
                self.hasher
                    .verify_password(password.as_bytes(), &parsed)
                    .is_ok()
            })
            .unwrap_or(false)
    }

    /// Exchange credentials for a new token. Every failure looks the same.
    pub fn login(&self, identifier: &str, password: &str) -> Result<SessionToken, AccountError> {
        let found = self.read(|s| {
            s.find_user(identifier.trim())
                .map(|u| (u.user_id.clone(), u.password_hash.clone()))
        });
        let Some((user_id, phc)) = found else {
            // spend the same effort as a real check
            self.verify_password(password, dummy_hash());
            return Err(AccountError::Auth);
        };
        if !self.verify_password(password, &phc) {
            return Err(AccountError::Auth);
        }

        let mut raw = [0u8; 32];
        rand::rng().fill_bytes(&mut raw);
        let token = hex::encode(raw);
        let issued_at = unix_now();
        self.commit(|s| {
            s.tokens.insert(
                token_digest(&token),
                TokenRecord {
                    user_id: user_id.clone(),
                    issued_at,
                },
            );
            Ok::<_, AccountError>(())
        })?;
        Ok(SessionToken {
            token,
            user_id,
            issued_at,
        })
    }

    pub fn authenticate(&self, token: &str) -> Result<String, AccountError> {
        let digest = token_digest(token);
        self.read(|s| s.tokens.get(&digest).map(|t| t.user_id.clone()))
            .ok_or(AccountError::Auth)
    }

    pub fn logout(&self, token: &str) -> Result<(), AccountError> {
        let digest = token_digest(token);
        self.commit(|s| {
            s.tokens
                .remove(&digest)
                .map(|_| ())
                .ok_or(AccountError::Auth)
        })
    }

    pub fn account(&self, user_id: &str) -> Option<UserAccount> {
        self.read(|s| s.users.get(user_id).cloned())
    }

    pub fn set_vehicle(&self, user_id: &str, vehicle: VehicleProfile) -> Result<(), AccountError> {
        self.commit(|s| {
            let user = s
                .users
                .get_mut(user_id)
                .ok_or_else(|| AccountError::UnknownUser(user_id.to_string()))?;
            user.vehicle = vehicle;
            Ok(())
        })
    }

    pub fn user_totals(&self, user_id: &str) -> Result<UserTotals, StoreError> {
        let records = self.fetch_results(user_id)?;
        Ok(UserTotals::from_records(records.values()))
    }

    /// Grant awards not yet held; returns the ones actually granted.
    pub fn record_awards(
        &self,
        user_id: &str,
        awards: &[AchievementAward],
    ) -> Result<Vec<AchievementAward>, AccountError> {
        self.commit(|s| {
            let user = s
                .users
                .get_mut(user_id)
                .ok_or_else(|| AccountError::UnknownUser(user_id.to_string()))?;
            let granted: Vec<_> = awards
                .iter()
                .filter(|a| !user.awarded.contains_key(&a.achievement_id))
                .cloned()
                .collect();
            for a in &granted {
                user.awarded
                    .insert(a.achievement_id.clone(), a.incentive_points);
            }
            s.recompute_wallet(user_id);
            Ok(granted)
        })
    }

    pub fn awarded_ids(&self, user_id: &str) -> BTreeSet<String> {
        self.read(|s| {
            s.users
                .get(user_id)
                .map(|u| u.awarded.keys().cloned().collect())
                .unwrap_or_default()
        })
    }

    /// Users by wallet, highest first; ties go to the earlier registration.
    pub fn leaderboard(&self, top_n: usize) -> Result<Vec<LeaderboardEntry>, AccountError> {
        if top_n < 1 {
            return Err(AccountError::InvalidArgument(
                "top_n must be at least 1".into(),
            ));
        }
        Ok(self.read(|s| {
            let mut users: Vec<&UserAccount> = s.users.values().collect();
            users.sort_by(|a, b| {
                b.wallet
                    .cmp(&a.wallet)
                    .then(a.registered_seq.cmp(&b.registered_seq))
            });
            users
                .into_iter()
                .take(top_n)
                .map(|u| LeaderboardEntry {
                    username: u.username.clone(),
                    total_points: u.wallet,
                })
                .collect()
        }))
    }
}

impl ResultStore for Store {
    fn put_result(
        &self,
        key: &ResultKey,
        record: &ResultRecord,
        overwrite: bool,
    ) -> Result<SaveOutcome, StoreError> {
        self.commit(|s| {
            let outcome = match s.results.get(key) {
                None => SaveOutcome::Stored,
                Some(_) if overwrite => SaveOutcome::Replaced,
                Some(_) => return Ok(SaveOutcome::RejectedExists),
            };
            s.results.insert(key.clone(), record.clone());
            s.recompute_wallet(key.user_id());
            Ok(outcome)
        })
    }

    fn fetch_results(
        &self,
        user_id: &str,
    ) -> Result<BTreeMap<ResultKey, ResultRecord>, StoreError> {
        Ok(self.read(|s| {
            s.results
                .iter()
                .filter(|(k, _)| k.user_id() == user_id)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect()
        }))
    }
}

fn write_snapshot(path: &Path, state: &StoreState) -> Result<(), StoreError> {
    let bytes = serde_json::to_vec(state).map_err(|e| StoreError::Corrupt(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(&bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        // make the rename itself durable; not supported everywhere
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

fn random_salt() -> Result<SaltString, AccountError> {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    SaltString::encode_b64(&bytes)
        .map_err(|e| AccountError::InvalidArgument(format!("salt encoding failed: {e}")))
}

fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn dummy_hash() -> &'static str {
    static HASH: OnceLock<String> = OnceLock::new();
    HASH.get_or_init(|| {
        let Ok(salt) = random_salt() else {
            return String::new();
        };
        Argon2::default()
            .hash_password(b"not-a-real-password", &salt)
            .map(|h| h.to_string())
            .unwrap_or_default()
    })
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn is_valid_email(email: &str) -> bool {
    let Some((local, domain)) = email.split_once('@') else {
        return false;
    };
    !local.is_empty()
        && !domain.contains('@')
        && !email.chars().any(|c| c.is_whitespace() || c.is_control())
        && domain.contains('.')
        && !domain.starts_with('.')
        && !domain.ends_with('.')
        && !domain.contains("..")
}
