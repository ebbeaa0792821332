#![allow(dead_code)]

use std::path::PathBuf;
use std::thread::JoinHandle;

use citytrail_core::content::bari_demo_pack;
use citytrail_core::persistence::Store;
use tempfile::TempDir;
use tokio::sync::oneshot;

/// A server on an ephemeral port with its own store, running on a private
/// runtime thread until dropped.
pub struct TestServer {
    pub base_url: String,
    pub store_path: PathBuf,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
    _dir: TempDir,
}

impl TestServer {
    pub fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store_path = dir.path().join("store.json");
        let state =
            citytrail_server::app_state(Store::open(&store_path).unwrap(), bari_demo_pack(), None)
                .unwrap();
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                citytrail_server::serve(listener, state, async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        TestServer {
            base_url: format!("http://{addr}"),
            store_path,
            shutdown: Some(stop_tx),
            thread: Some(thread),
            _dir: dir,
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
