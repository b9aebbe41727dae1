use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use siac_core::codec::{read_wav_bytes, resample};
use siac_core::dsp::Pcm;
use siac_core::encoder::EncoderConfig;
use siac_core::stream::{encode_stream, StreamEncoding};
use siac_core::synth::RirBank;
use tokio::sync::{Mutex, Semaphore};

use crate::edit::{replay, JournalEntry};
use crate::store;

#[derive(Debug, Clone)]
pub struct Config {
    pub data_dir: PathBuf,
    pub max_upload_bytes: usize,
    /// Encoding jobs allowed to run at once.
    pub workers: usize,
    pub encoder: EncoderConfig,
}

impl Config {
    pub fn new(data_dir: PathBuf) -> Self {
        Self {
            data_dir,
            max_upload_bytes: 64 << 20,
            workers: 2,
            encoder: EncoderConfig::default(),
        }
    }
}

/// One immutable revision of a session.
#[derive(Debug)]
pub struct Snapshot {
    pub revision: u64,
    pub encoding: StreamEncoding,
    pub source: Arc<Pcm>,
}

#[derive(Debug, Clone)]
pub enum Status {
    Encoding,
    Failed(String),
    Ready(Arc<Snapshot>),
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub dir: PathBuf,
    status: RwLock<Status>,
    /// Held for the whole read-modify-write of an edit.
    pub writer: Mutex<()>,
}

impl Session {
    fn new(id: String, dir: PathBuf, status: Status) -> Self {
        Self {
            id,
            dir,
            status: RwLock::new(status),
            writer: Mutex::new(()),
        }
    }

    pub fn status(&self) -> Status {
        self.status.read().expect("status lock").clone()
    }

    pub fn set_status(&self, s: Status) {
        *self.status.write().expect("status lock") = s;
    }
}

pub struct AppState {
    pub config: Config,
    pub bank: Arc<RirBank>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    jobs: Arc<Semaphore>,
}

/// Decodes an upload and converts it to the bank's rate.
pub fn decode_upload(bytes: &[u8], sample_rate: u32) -> siac_core::Result<Pcm> {
    let pcm = read_wav_bytes(bytes)?;
    if pcm.sample_rate() == sample_rate {
        return Ok(pcm);
    }
    Pcm::new(resample(pcm.samples(), pcm.sample_rate(), sample_rate)?, sample_rate)
}

impl AppState {
    pub fn new(config: Config, bank: RirBank) -> Self {
        let jobs = Arc::new(Semaphore::new(config.workers.max(1)));
        Self {
            config,
            bank: Arc::new(bank),
            sessions: RwLock::new(HashMap::new()),
            jobs,
        }
    }

    /// Restores every session under the data directory by replaying its
    /// journal onto the initial encoding. Returns how many were restored.
    pub fn restore(&self) -> Result<usize, store::StoreError> {
        let mut restored = 0;
        for (id, dir) in store::list_sessions(&self.config.data_dir)? {
            let status = match self.load_session(&dir) {
                Ok(snap) => {
                    restored += 1;
                    Status::Ready(Arc::new(snap))
                }
                Err(msg) => Status::Failed(msg),
            };
            self.insert(Arc::new(Session::new(id, dir, status)));
        }
        Ok(restored)
    }

    fn load_session(&self, dir: &std::path::Path) -> Result<Snapshot, String> {
        let source = decode_upload(&store::read_source(dir).map_err(|e| e.to_string())?, self.bank.sample_rate())
            .map_err(|e| e.to_string())?;
        let initial_path = dir.join(store::INITIAL);
        if !initial_path.exists() {
            return Err("encoding did not finish; upload the audio again".into());
        }
        let initial = store::read_encoding(&initial_path).map_err(|e| e.to_string())?;
        let journal = store::read_journal(dir).map_err(|e| e.to_string())?;
        let (encoding, revision) = replay(&initial, &journal).map_err(|e| e.to_string())?;
        let current_path = dir.join(store::CURRENT);
        if store::read_encoding(&current_path).ok().as_ref() != Some(&encoding) {
            store::write_encoding(&current_path, &encoding).map_err(|e| e.to_string())?;
        }
        Ok(Snapshot {
            revision,
            encoding,
            source: Arc::new(source),
        })
    }

    fn insert(&self, s: Arc<Session>) {
        self.sessions.write().expect("session map").insert(s.id.clone(), s);
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().expect("session map").get(id).cloned()
    }

    /// Stores the upload and starts encoding it in the background.
    pub fn create(self: &Arc<Self>, upload: Vec<u8>, source: Pcm) -> Result<Arc<Session>, store::StoreError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.config.data_dir.join(&id);
        store::create_dir(&dir)?;
        store::write_source(&dir, &upload)?;
        let session = Arc::new(Session::new(id, dir, Status::Encoding));
        self.insert(session.clone());

        let state = self.clone();
        let job = session.clone();
        tokio::spawn(async move {
            let _permit = state.jobs.clone().acquire_owned().await.expect("semaphore never closed");
            let source = Arc::new(source);
            let worker = state.clone();
            let input = source.clone();
            let dir = job.dir.clone();
            let result = tokio::task::spawn_blocking(move || {
                let enc = encode_stream(&input, &worker.config.encoder, &worker.bank).map_err(|e| e.to_string())?;
                persist_initial(&dir, enc)
            })
            .await
            .unwrap_or_else(|e| Err(format!("encoder crashed: {e}")));
            let status = match result {
                Ok(encoding) => Status::Ready(Arc::new(Snapshot {
                    revision: 0,
                    encoding,
                    source,
                })),
                Err(msg) => Status::Failed(msg),
            };
            job.set_status(status);
        });
        Ok(session)
    }

    /// Validates, persists and publishes an edited encoding.
    pub fn commit(&self, session: &Session, snap: &Snapshot, entry: JournalEntry, encoding: StreamEncoding) -> Result<Arc<Snapshot>, store::StoreError> {
        store::append_journal(&session.dir, &entry)?;
        store::write_encoding(&session.dir.join(store::CURRENT), &encoding)?;
        let next = Arc::new(Snapshot {
            revision: entry.revision,
            encoding,
            source: snap.source.clone(),
        });
        session.set_status(Status::Ready(next.clone()));
        Ok(next)
    }
}

fn persist_initial(dir: &std::path::Path, enc: StreamEncoding) -> Result<StreamEncoding, String> {
    store::write_encoding(&dir.join(store::INITIAL), &enc).map_err(|e| e.to_string())?;
    store::write_encoding(&dir.join(store::CURRENT), &enc).map_err(|e| e.to_string())?;
    store::write_atomic(&dir.join(store::JOURNAL), b"").map_err(|e| e.to_string())?;
    Ok(enc)
}
