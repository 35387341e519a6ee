//! Deterministic block-based ledger with omega-confirmation semantics,
//! 2-of-2 multisig spend validation, and an append-only public log carried
//! as fee-bearing transaction payloads.
//!
//! The chain model is intentionally simple: no proof-of-work, no forks, no
//! propagation delay. Every valid pending transaction is included in the next
//! mined block, and a block's timestamp is just `height * block_interval`.
//! Submissions are totally ordered by arrival, which makes a run with a fixed
//! submission schedule byte-reproducible.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::crypto::{
    address_of, multisig_address, sha256, verify, Address, AddressKind, PublicKey, Signature,
};
use crate::wire::{Reader, WireDecode, WireEncode, WireError, Writer};

pub type Height = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("input authorization is missing or does not verify")]
    InvalidSignature,
    #[error("outputs plus required fee exceed inputs")]
    InsufficientFunds,
    #[error("input is already spent or reserved by a pending transaction")]
    DoubleSpend,
    #[error("referenced utxo does not exist")]
    UnknownUtxo,
    #[error("log post fee below the per-kilobyte rate")]
    UnderpaidLogFee,
    #[error("transaction fee below the configured minimum")]
    FeeTooLow,
    #[error("unknown transaction")]
    UnknownTransaction,
    #[error("malformed transaction: {0}")]
    Malformed(&'static str),
}

/// Identifier of a transaction: SHA-256 over its canonical encoding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId(pub [u8; 32]);

impl TxId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<TxId, WireError> {
        let bytes = hex::decode(s).map_err(|_| WireError::BadDiscriminant(0))?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| WireError::BadDiscriminant(0))?;
        Ok(TxId(arr))
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", self.to_hex())
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for TxId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TxId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<TxId, D::Error> {
        let s = String::deserialize(d)?;
        TxId::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutPoint {
    pub txid: TxId,
    pub vout: u32,
}

/// Authorization attached to a transaction input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpendAuth {
    /// Only valid inside the genesis block.
    Genesis,
    Single {
        #[serde(with = "serde_wire")]
        key: PublicKey,
        #[serde(with = "serde_wire")]
        sig: Signature,
    },
    /// 2-of-2 escrow spend. Both constituent keys and both signatures are
    /// required; a partially signed transaction is not submittable.
    Multi2of2 {
        #[serde(with = "serde_wire")]
        key_a: PublicKey,
        #[serde(with = "serde_wire")]
        key_b: PublicKey,
        #[serde(with = "serde_wire_opt")]
        sig_a: Option<Signature>,
        #[serde(with = "serde_wire_opt")]
        sig_b: Option<Signature>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxInput {
    pub outpoint: OutPoint,
    pub auth: SpendAuth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOutput {
    pub address: Address,
    pub amount: Amount,
}

/// Who a public-log entry is attributed to. Posts sent over an anonymous
/// channel carry no identity even though the funding input is on-chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Poster {
    Anonymous,
    Identified(Address),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    #[serde(with = "serde_hex_opt")]
    pub log_payload: Option<Vec<u8>>,
    pub log_poster: Option<Poster>,
}

impl Transaction {
    pub fn standard(inputs: Vec<TxInput>, outputs: Vec<TxOutput>) -> Transaction {
        Transaction {
            inputs,
            outputs,
            log_payload: None,
            log_poster: None,
        }
    }

    pub fn log_post(
        inputs: Vec<TxInput>,
        outputs: Vec<TxOutput>,
        payload: Vec<u8>,
        poster: Poster,
    ) -> Transaction {
        Transaction {
            inputs,
            outputs,
            log_payload: Some(payload),
            log_poster: Some(poster),
        }
    }

    pub fn txid(&self) -> TxId {
        TxId(sha256(&self.to_wire()))
    }

    /// Digest every signer commits to: inputs by outpoint, all outputs, and
    /// the log payload. Signatures and keys are excluded so that co-signing
    /// does not change the payload being signed.
    pub fn sighash(&self) -> [u8; 32] {
        let mut w = Writer::new();
        w.put_u32(self.inputs.len() as u32);
        for input in &self.inputs {
            w.put_raw(&input.outpoint.txid.0);
            w.put_u32(input.outpoint.vout);
        }
        encode_outputs_and_log(self, &mut w);
        sha256(&w.finish())
    }

    pub fn total_output(&self) -> Amount {
        self.outputs
            .iter()
            .fold(Amount::ZERO, |acc, o| acc + o.amount)
    }

    pub fn is_log_post(&self) -> bool {
        self.log_payload.is_some()
    }

    /// True if any input spends a 2-of-2 escrow.
    pub fn is_multisig_spend(&self) -> bool {
        self.inputs
            .iter()
            .any(|i| matches!(i.auth, SpendAuth::Multi2of2 { .. }))
    }
}

fn encode_outputs_and_log(tx: &Transaction, w: &mut Writer) {
    w.put_u32(tx.outputs.len() as u32);
    for output in &tx.outputs {
        output.address.encode(w);
        w.put_u64(output.amount.sats());
    }
    match &tx.log_payload {
        None => {
            w.put_u8(0);
        }
        Some(payload) => {
            w.put_u8(1);
            w.put_bytes(payload);
            match tx.log_poster {
                Some(Poster::Anonymous) | None => {
                    w.put_u8(0);
                }
                Some(Poster::Identified(addr)) => {
                    w.put_u8(1);
                    addr.encode(w);
                }
            }
        }
    }
}

impl WireEncode for Transaction {
    fn encode(&self, w: &mut Writer) {
        w.put_u8(1); // version
        w.put_u32(self.inputs.len() as u32);
        for input in &self.inputs {
            w.put_raw(&input.outpoint.txid.0);
            w.put_u32(input.outpoint.vout);
            match &input.auth {
                SpendAuth::Genesis => {
                    w.put_u8(0);
                }
                SpendAuth::Single { key, sig } => {
                    w.put_u8(1);
                    key.encode(w);
                    sig.encode(w);
                }
                SpendAuth::Multi2of2 {
                    key_a,
                    key_b,
                    sig_a,
                    sig_b,
                } => {
                    w.put_u8(2);
                    key_a.encode(w);
                    key_b.encode(w);
                    for sig in [sig_a, sig_b] {
                        match sig {
                            None => {
                                w.put_u8(0);
                            }
                            Some(s) => {
                                w.put_u8(1);
                                s.encode(w);
                            }
                        }
                    }
                }
            }
        }
        encode_outputs_and_log(self, w);
    }
}

impl WireDecode for Transaction {
    fn decode(r: &mut Reader<'_>) -> Result<Transaction, WireError> {
        r.expect_tag(1)?;
        let n_inputs = r.get_u32()?;
        let mut inputs = Vec::with_capacity(n_inputs.min(1024) as usize);
        for _ in 0..n_inputs {
            let txid = TxId(r.get_array::<32>()?);
            let vout = r.get_u32()?;
            let auth = match r.get_u8()? {
                0 => SpendAuth::Genesis,
                1 => SpendAuth::Single {
                    key: PublicKey::decode(r)?,
                    sig: Signature::decode(r)?,
                },
                2 => {
                    let key_a = PublicKey::decode(r)?;
                    let key_b = PublicKey::decode(r)?;
                    let mut sigs = [None, None];
                    for slot in &mut sigs {
                        *slot = match r.get_u8()? {
                            0 => None,
                            1 => Some(Signature::decode(r)?),
                            other => return Err(WireError::BadDiscriminant(other)),
                        };
                    }
                    let [sig_a, sig_b] = sigs;
                    SpendAuth::Multi2of2 {
                        key_a,
                        key_b,
                        sig_a,
                        sig_b,
                    }
                }
                other => return Err(WireError::BadDiscriminant(other)),
            };
            inputs.push(TxInput {
                outpoint: OutPoint { txid, vout },
                auth,
            });
        }
        let n_outputs = r.get_u32()?;
        let mut outputs = Vec::with_capacity(n_outputs.min(1024) as usize);
        for _ in 0..n_outputs {
            let address = Address::decode(r)?;
            let amount = Amount::from_sats(r.get_u64()?);
            outputs.push(TxOutput { address, amount });
        }
        let (log_payload, log_poster) = match r.get_u8()? {
            0 => (None, None),
            1 => {
                let payload = r.get_bytes()?.to_vec();
                let poster = match r.get_u8()? {
                    0 => Poster::Anonymous,
                    1 => Poster::Identified(Address::decode(r)?),
                    other => return Err(WireError::BadDiscriminant(other)),
                };
                (Some(payload), Some(poster))
            }
            other => return Err(WireError::BadDiscriminant(other)),
        };
        Ok(Transaction {
            inputs,
            outputs,
            log_payload,
            log_poster,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: Height,
    pub time_mins: u64,
    pub transactions: Vec<RecordedTx>,
}

/// A transaction as recorded in a block, with its id for readability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedTx {
    pub id: TxId,
    #[serde(flatten)]
    pub tx: Transaction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utxo {
    pub owner: Address,
    pub amount: Amount,
    pub created_at: Height,
    pub spent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicLogEntry {
    pub payload: Vec<u8>,
    pub posted_at: Height,
    pub poster: Poster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerConfig {
    /// Simulated minutes between blocks.
    pub block_interval_mins: u64,
    /// Log fee per started 1000 payload bytes.
    pub log_fee_per_kb: Amount,
    /// Minimum fee on ordinary (non-log) transactions.
    pub ordinary_tx_fee: Amount,
}

impl Default for LedgerConfig {
    fn default() -> LedgerConfig {
        LedgerConfig {
            block_interval_mins: 10,
            log_fee_per_kb: Amount::from_sats(10_000), // 0.0001 BTC / 1000 bytes
            ordinary_tx_fee: Amount::ZERO,
        }
    }
}

pub struct Ledger {
    config: LedgerConfig,
    blocks: Vec<Block>,
    utxos: HashMap<OutPoint, Utxo>,
    pending: Vec<Transaction>,
    reserved: HashSet<OutPoint>,
    inclusion: HashMap<TxId, Height>,
    log: Vec<PublicLogEntry>,
    cumulative_fees: Amount,
    minted: Amount,
}

impl Ledger {
    /// Create a ledger whose genesis block mints the given balances.
    pub fn with_genesis(config: LedgerConfig, mints: &[(Address, Amount)]) -> Ledger {
        let outputs: Vec<TxOutput> = mints
            .iter()
            .map(|&(address, amount)| TxOutput { address, amount })
            .collect();
        let genesis_tx = Transaction::standard(Vec::new(), outputs);
        let id = genesis_tx.txid();
        let mut ledger = Ledger {
            config,
            blocks: Vec::new(),
            utxos: HashMap::new(),
            pending: Vec::new(),
            reserved: HashSet::new(),
            inclusion: HashMap::new(),
            log: Vec::new(),
            cumulative_fees: Amount::ZERO,
            minted: genesis_tx.total_output(),
        };
        ledger.inclusion.insert(id, 0);
        for (vout, output) in genesis_tx.outputs.iter().enumerate() {
            ledger.utxos.insert(
                OutPoint {
                    txid: id,
                    vout: vout as u32,
                },
                Utxo {
                    owner: output.address,
                    amount: output.amount,
                    created_at: 0,
                    spent: false,
                },
            );
        }
        ledger.blocks.push(Block {
            height: 0,
            time_mins: 0,
            transactions: vec![RecordedTx { id, tx: genesis_tx }],
        });
        ledger
    }

    pub fn config(&self) -> &LedgerConfig {
        self.config_ref()
    }

    fn config_ref(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn height(&self) -> Height {
        self.blocks.last().map(|b| b.height).unwrap_or(0)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn log_fee_for(&self, payload_len: usize) -> Amount {
        let kbs = payload_len.div_ceil(1000).max(1) as u64;
        Amount::from_sats(kbs * self.config.log_fee_per_kb.sats())
    }

    /// Validate and queue a transaction for the next block.
    pub fn submit(&mut self, tx: Transaction) -> Result<TxId, LedgerError> {
        self.validate(&tx)?;
        let txid = tx.txid();
        if self.inclusion.contains_key(&txid) {
            return Err(LedgerError::DoubleSpend);
        }
        for input in &tx.inputs {
            self.reserved.insert(input.outpoint);
        }
        self.pending.push(tx);
        Ok(txid)
    }

    /// Convenience for fee-bearing log posts; the transaction must carry a
    /// payload.
    pub fn post_log(&mut self, tx: Transaction) -> Result<TxId, LedgerError> {
        if !tx.is_log_post() {
            return Err(LedgerError::Malformed("log post without payload"));
        }
        self.submit(tx)
    }

    fn validate(&self, tx: &Transaction) -> Result<(), LedgerError> {
        if tx.inputs.is_empty() {
            return Err(LedgerError::Malformed("no inputs"));
        }
        if tx.log_payload.as_ref().is_some_and(|p| p.is_empty()) {
            return Err(LedgerError::Malformed("empty log payload"));
        }
        if tx.log_payload.is_some() != tx.log_poster.is_some() {
            return Err(LedgerError::Malformed("log payload and poster must pair"));
        }
        let mut seen = HashSet::new();
        let sighash = tx.sighash();
        let mut total_in: u128 = 0;
        for input in &tx.inputs {
            if !seen.insert(input.outpoint) {
                return Err(LedgerError::DoubleSpend);
            }
            let utxo = self
                .utxos
                .get(&input.outpoint)
                .ok_or(LedgerError::UnknownUtxo)?;
            if utxo.spent || self.reserved.contains(&input.outpoint) {
                return Err(LedgerError::DoubleSpend);
            }
            check_auth(&input.auth, &utxo.owner, &sighash)?;
            total_in += utxo.amount.sats() as u128;
        }
        let total_out: u128 = tx.outputs.iter().map(|o| o.amount.sats() as u128).sum();
        if total_out > total_in {
            return Err(LedgerError::InsufficientFunds);
        }
        let fee = total_in - total_out;
        match &tx.log_payload {
            Some(payload) => {
                if fee < self.log_fee_for(payload.len()).sats() as u128 {
                    return Err(LedgerError::UnderpaidLogFee);
                }
            }
            None => {
                if fee < self.config.ordinary_tx_fee.sats() as u128 {
                    return Err(LedgerError::FeeTooLow);
                }
            }
        }
        Ok(())
    }

    /// Mine all pending transactions into the next block.
    pub fn mine_block(&mut self) -> Height {
        let height = self.height() + 1;
        let txs = std::mem::take(&mut self.pending);
        self.reserved.clear();
        let mut recorded = Vec::with_capacity(txs.len());
        for tx in txs {
            let id = tx.txid();
            let mut in_total = Amount::ZERO;
            for input in &tx.inputs {
                let utxo = self.utxos.get_mut(&input.outpoint).expect("validated");
                utxo.spent = true;
                in_total += utxo.amount;
            }
            for (vout, output) in tx.outputs.iter().enumerate() {
                self.utxos.insert(
                    OutPoint {
                        txid: id,
                        vout: vout as u32,
                    },
                    Utxo {
                        owner: output.address,
                        amount: output.amount,
                        created_at: height,
                        spent: false,
                    },
                );
            }
            self.cumulative_fees += in_total - tx.total_output();
            if let (Some(payload), Some(poster)) = (&tx.log_payload, tx.log_poster) {
                self.log.push(PublicLogEntry {
                    payload: payload.clone(),
                    posted_at: height,
                    poster,
                });
            }
            self.inclusion.insert(id, height);
            recorded.push(RecordedTx { id, tx });
        }
        self.blocks.push(Block {
            height,
            time_mins: height * self.config.block_interval_mins,
            transactions: recorded,
        });
        height
    }

    /// Blocks on top of (and including) the inclusion block; 0 while pending.
    pub fn confirmations(&self, txid: &TxId) -> Result<u64, LedgerError> {
        if let Some(&included) = self.inclusion.get(txid) {
            return Ok(self.height() - included + 1);
        }
        if self.pending.iter().any(|tx| tx.txid() == *txid) {
            return Ok(0);
        }
        Err(LedgerError::UnknownTransaction)
    }

    pub fn inclusion_height(&self, txid: &TxId) -> Option<Height> {
        self.inclusion.get(txid).copied()
    }

    pub fn find_tx(&self, txid: &TxId) -> Option<(&Transaction, Height)> {
        let height = self.inclusion_height(txid)?;
        self.blocks
            .iter()
            .find(|b| b.height == height)?
            .transactions
            .iter()
            .find(|r| r.id == *txid)
            .map(|r| (&r.tx, height))
    }

    /// All mined log entries matching `predicate`, in ledger order.
    pub fn scan_log(&self, predicate: impl Fn(&PublicLogEntry) -> bool) -> Vec<&PublicLogEntry> {
        self.log.iter().filter(|e| predicate(e)).collect()
    }

    pub fn log(&self) -> &[PublicLogEntry] {
        &self.log
    }

    pub fn utxo(&self, outpoint: &OutPoint) -> Option<&Utxo> {
        self.utxos.get(outpoint)
    }

    /// Unspent outpoints owned by `address`, oldest first then by outpoint.
    pub fn unspent_of(&self, address: &Address) -> Vec<(OutPoint, Amount)> {
        let mut found: Vec<(OutPoint, Amount, Height)> = self
            .utxos
            .iter()
            .filter(|(_, u)| !u.spent && u.owner == *address)
            .map(|(op, u)| (*op, u.amount, u.created_at))
            .collect();
        found.sort_by_key(|&(op, _, created)| (created, op));
        found.into_iter().map(|(op, amt, _)| (op, amt)).collect()
    }

    pub fn balance(&self, address: &Address) -> Amount {
        self.unspent_of(address)
            .iter()
            .fold(Amount::ZERO, |acc, &(_, amt)| acc + amt)
    }

    /// True if any mined output ever paid this address.
    pub fn address_seen(&self, address: &Address) -> bool {
        self.utxos.values().any(|u| u.owner == *address)
    }

    pub fn total_unspent(&self) -> Amount {
        self.utxos
            .values()
            .filter(|u| !u.spent)
            .fold(Amount::ZERO, |acc, u| acc + u.amount)
    }

    pub fn cumulative_fees(&self) -> Amount {
        self.cumulative_fees
    }

    pub fn minted(&self) -> Amount {
        self.minted
    }

    /// Conservation: nothing is created after genesis; burnt fees account
    /// for the difference.
    pub fn conservation_holds(&self) -> bool {
        self.total_unspent() + self.cumulative_fees == self.minted
    }

    /// One block per line, canonical field order.
    pub fn dump_jsonl(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            out.push_str(&serde_json::to_string(block).expect("block serializes"));
            out.push('\n');
        }
        out
    }

    /// Rebuild a ledger view from a JSONL dump, verifying structural
    /// integrity (consecutive heights, recorded ids matching content).
    pub fn restore_jsonl(config: LedgerConfig, data: &str) -> Result<Ledger, LedgerError> {
        let mut ledger = Ledger {
            config,
            blocks: Vec::new(),
            utxos: HashMap::new(),
            pending: Vec::new(),
            reserved: HashSet::new(),
            inclusion: HashMap::new(),
            log: Vec::new(),
            cumulative_fees: Amount::ZERO,
            minted: Amount::ZERO,
        };
        for (lineno, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let block: Block = serde_json::from_str(line)
                .map_err(|_| LedgerError::Malformed("unparseable block line"))?;
            if block.height != lineno as u64 {
                return Err(LedgerError::Malformed("non-consecutive block heights"));
            }
            for recorded in &block.transactions {
                if recorded.tx.txid() != recorded.id {
                    return Err(LedgerError::Malformed("transaction id mismatch"));
                }
                let mut in_total = Amount::ZERO;
                for input in &recorded.tx.inputs {
                    if block.height == 0 {
                        continue;
                    }
                    let utxo = ledger
                        .utxos
                        .get_mut(&input.outpoint)
                        .ok_or(LedgerError::UnknownUtxo)?;
                    if utxo.spent {
                        return Err(LedgerError::DoubleSpend);
                    }
                    utxo.spent = true;
                    in_total += utxo.amount;
                }
                for (vout, output) in recorded.tx.outputs.iter().enumerate() {
                    ledger.utxos.insert(
                        OutPoint {
                            txid: recorded.id,
                            vout: vout as u32,
                        },
                        Utxo {
                            owner: output.address,
                            amount: output.amount,
                            created_at: block.height,
                            spent: false,
                        },
                    );
                }
                if block.height == 0 {
                    ledger.minted += recorded.tx.total_output();
                } else {
                    ledger.cumulative_fees += in_total - recorded.tx.total_output();
                }
                if let (Some(payload), Some(poster)) =
                    (&recorded.tx.log_payload, recorded.tx.log_poster)
                {
                    ledger.log.push(PublicLogEntry {
                        payload: payload.clone(),
                        posted_at: block.height,
                        poster,
                    });
                }
                ledger.inclusion.insert(recorded.id, block.height);
            }
            ledger.blocks.push(block);
        }
        if ledger.blocks.is_empty() {
            return Err(LedgerError::Malformed("empty dump"));
        }
        Ok(ledger)
    }
}

fn check_auth(auth: &SpendAuth, owner: &Address, sighash: &[u8; 32]) -> Result<(), LedgerError> {
    match auth {
        SpendAuth::Genesis => Err(LedgerError::InvalidSignature),
        SpendAuth::Single { key, sig } => {
            if owner.kind != AddressKind::Single || address_of(key) != *owner {
                return Err(LedgerError::InvalidSignature);
            }
            if !verify(key, sighash, sig) {
                return Err(LedgerError::InvalidSignature);
            }
            Ok(())
        }
        SpendAuth::Multi2of2 {
            key_a,
            key_b,
            sig_a,
            sig_b,
        } => {
            if owner.kind != AddressKind::Multisig2of2 {
                return Err(LedgerError::InvalidSignature);
            }
            let derived =
                multisig_address(key_a, key_b).map_err(|_| LedgerError::InvalidSignature)?;
            if derived != *owner {
                return Err(LedgerError::InvalidSignature);
            }
            let (sig_a, sig_b) = match (sig_a, sig_b) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(LedgerError::InvalidSignature),
            };
            if !verify(key_a, sighash, sig_a) || !verify(key_b, sighash, sig_b) {
                return Err(LedgerError::InvalidSignature);
            }
            Ok(())
        }
    }
}

mod serde_wire {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::wire::{WireDecode, WireEncode};

    pub fn serialize<T: WireEncode, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_hex())
    }

    pub fn deserialize<'de, T: WireDecode, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
        T::from_wire(&bytes).map_err(serde::de::Error::custom)
    }
}

mod serde_wire_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::wire::{WireDecode, WireEncode};

    pub fn serialize<T: WireEncode, S: Serializer>(
        v: &Option<T>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&v.to_hex()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: WireDecode, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<T>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        match text {
            None => Ok(None),
            Some(text) => {
                let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
                T::from_wire(&bytes).map(Some).map_err(serde::de::Error::custom)
            }
        }
    }
}

mod serde_hex_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_some(&hex::encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        match text {
            None => Ok(None),
            Some(text) => hex::decode(&text).map(Some).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{keygen, sign, KeyPair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pair(seed: u64) -> KeyPair {
        keygen(512, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
    }

    fn genesis_outpoint(ledger: &Ledger, vout: u32) -> OutPoint {
        OutPoint {
            txid: ledger.blocks()[0].transactions[0].id,
            vout,
        }
    }

    fn single_spend(
        ledger: &Ledger,
        from: &KeyPair,
        vout: u32,
        to: Address,
        amount: Amount,
    ) -> Transaction {
        let outpoint = genesis_outpoint(ledger, vout);
        let mut tx = Transaction::standard(
            vec![TxInput {
                outpoint,
                auth: SpendAuth::Genesis,
            }],
            vec![TxOutput {
                address: to,
                amount,
            }],
        );
        let sighash = tx.sighash();
        tx.inputs[0].auth = SpendAuth::Single {
            key: from.public.clone(),
            sig: sign(&from.private, &sighash),
        };
        tx
    }

    #[test]
    fn mine_and_confirmations() {
        let alice = pair(1);
        let bob = pair(2);
        let a_addr = address_of(&alice.public);
        let mut ledger = Ledger::with_genesis(
            LedgerConfig::default(),
            &[(a_addr, Amount::from_btc_str("1").unwrap())],
        );
        assert_eq!(ledger.height(), 0);

        let tx = single_spend(
            &ledger,
            &alice,
            0,
            address_of(&bob.public),
            Amount::from_btc_str("1").unwrap(),
        );
        let txid = ledger.submit(tx).unwrap();
        assert_eq!(ledger.confirmations(&txid).unwrap(), 0);

        ledger.mine_block();
        assert_eq!(ledger.confirmations(&txid).unwrap(), 1);
        for _ in 0..5 {
            ledger.mine_block();
        }
        assert_eq!(ledger.confirmations(&txid).unwrap(), 6);
        assert_eq!(
            ledger.confirmations(&TxId([9; 32])).unwrap_err(),
            LedgerError::UnknownTransaction
        );
        assert!(ledger.conservation_holds());
    }

    #[test]
    fn empty_blocks_advance_height() {
        let mut ledger = Ledger::with_genesis(LedgerConfig::default(), &[]);
        assert_eq!(ledger.mine_block(), 1);
        assert_eq!(ledger.blocks()[1].transactions.len(), 0);
        assert_eq!(ledger.blocks()[1].time_mins, 10);
    }

    #[test]
    fn overspend_rejected() {
        let alice = pair(3);
        let a_addr = address_of(&alice.public);
        let mut ledger =
            Ledger::with_genesis(LedgerConfig::default(), &[(a_addr, Amount::from_sats(100))]);
        let tx = single_spend(&ledger, &alice, 0, a_addr, Amount::from_sats(101));
        assert_eq!(ledger.submit(tx).unwrap_err(), LedgerError::InsufficientFunds);
    }

    #[test]
    fn double_spend_rejected_in_mempool_and_after_mining() {
        let alice = pair(4);
        let a_addr = address_of(&alice.public);
        let mut ledger =
            Ledger::with_genesis(LedgerConfig::default(), &[(a_addr, Amount::from_sats(100))]);
        let tx1 = single_spend(&ledger, &alice, 0, a_addr, Amount::from_sats(100));
        let tx2 = single_spend(&ledger, &alice, 0, a_addr, Amount::from_sats(99));
        ledger.submit(tx1).unwrap();
        assert_eq!(
            ledger.submit(tx2.clone()).unwrap_err(),
            LedgerError::DoubleSpend
        );
        ledger.mine_block();
        assert_eq!(ledger.submit(tx2).unwrap_err(), LedgerError::DoubleSpend);
    }

    #[test]
    fn unknown_utxo_rejected() {
        let alice = pair(5);
        let mut ledger = Ledger::with_genesis(LedgerConfig::default(), &[]);
        let mut tx = Transaction::standard(
            vec![TxInput {
                outpoint: OutPoint {
                    txid: TxId([7; 32]),
                    vout: 0,
                },
                auth: SpendAuth::Genesis,
            }],
            vec![],
        );
        let sighash = tx.sighash();
        tx.inputs[0].auth = SpendAuth::Single {
            key: alice.public.clone(),
            sig: sign(&alice.private, &sighash),
        };
        assert_eq!(ledger.submit(tx).unwrap_err(), LedgerError::UnknownUtxo);
    }

    #[test]
    fn wrong_key_signature_rejected() {
        let alice = pair(6);
        let mallory = pair(7);
        let a_addr = address_of(&alice.public);
        let mut ledger =
            Ledger::with_genesis(LedgerConfig::default(), &[(a_addr, Amount::from_sats(100))]);
        let tx = single_spend(&ledger, &mallory, 0, a_addr, Amount::from_sats(100));
        assert_eq!(ledger.submit(tx).unwrap_err(), LedgerError::InvalidSignature);
    }

    #[test]
    fn multisig_requires_both_signatures() {
        let alice = pair(8);
        let mixer = pair(9);
        let escrow = multisig_address(&alice.public, &mixer.public).unwrap();
        let mut ledger = Ledger::with_genesis(
            LedgerConfig::default(),
            &[(escrow, Amount::from_sats(1000))],
        );
        let outpoint = genesis_outpoint(&ledger, 0);
        let outputs = vec![TxOutput {
            address: address_of(&alice.public),
            amount: Amount::from_sats(1000),
        }];
        let mut tx = Transaction::standard(
            vec![TxInput {
                outpoint,
                auth: SpendAuth::Genesis,
            }],
            outputs,
        );
        let sighash = tx.sighash();
        let sig_a = sign(&alice.private, &sighash);
        let sig_b = sign(&mixer.private, &sighash);

        // One signature: rejected.
        tx.inputs[0].auth = SpendAuth::Multi2of2 {
            key_a: alice.public.clone(),
            key_b: mixer.public.clone(),
            sig_a: Some(sig_a.clone()),
            sig_b: None,
        };
        assert_eq!(
            ledger.submit(tx.clone()).unwrap_err(),
            LedgerError::InvalidSignature
        );

        // Both signatures: accepted.
        tx.inputs[0].auth = SpendAuth::Multi2of2 {
            key_a: alice.public.clone(),
            key_b: mixer.public.clone(),
            sig_a: Some(sig_a),
            sig_b: Some(sig_b),
        };
        ledger.submit(tx).unwrap();
        ledger.mine_block();
        assert!(ledger.conservation_holds());
    }

    #[test]
    fn log_fees_follow_the_per_kb_rate() {
        let mut ledger = Ledger::with_genesis(LedgerConfig::default(), &[]);
        assert_eq!(ledger.log_fee_for(5000), Amount::from_btc_str("0.0005").unwrap());
        assert_eq!(ledger.log_fee_for(1000), Amount::from_btc_str("0.0001").unwrap());
        assert_eq!(ledger.log_fee_for(1001), Amount::from_btc_str("0.0002").unwrap());
        assert_eq!(ledger.log_fee_for(1), Amount::from_btc_str("0.0001").unwrap());
        // mempool untouched by fee queries
        assert_eq!(ledger.mine_block(), 1);
    }

    #[test]
    fn underpaid_log_post_rejected_and_paid_one_accepted() {
        let poster = pair(10);
        let p_addr = address_of(&poster.public);
        let mut ledger = Ledger::with_genesis(
            LedgerConfig::default(),
            &[
                (p_addr, Amount::from_sats(50_000)),
                (p_addr, Amount::from_sats(49_999)),
            ],
        );

        let build = |ledger: &Ledger, vout: u32| {
            let mut tx = Transaction::log_post(
                vec![TxInput {
                    outpoint: genesis_outpoint(ledger, vout),
                    auth: SpendAuth::Genesis,
                }],
                vec![],
                vec![0xAB; 5000],
                Poster::Identified(p_addr),
            );
            let sighash = tx.sighash();
            tx.inputs[0].auth = SpendAuth::Single {
                key: poster.public.clone(),
                sig: sign(&poster.private, &sighash),
            };
            tx
        };

        let underfunded = build(&ledger, 1);
        assert_eq!(
            ledger.submit(underfunded).unwrap_err(),
            LedgerError::UnderpaidLogFee
        );

        let funded = build(&ledger, 0);
        ledger.submit(funded).unwrap();
        ledger.mine_block();
        assert_eq!(ledger.log().len(), 1);
        assert_eq!(ledger.log()[0].posted_at, 1);
        assert_eq!(ledger.cumulative_fees(), Amount::from_sats(50_000));
    }

    #[test]
    fn scan_log_preserves_ledger_order() {
        let poster = pair(11);
        let p_addr = address_of(&poster.public);
        let fee = Amount::from_sats(10_000);
        let mints: Vec<(Address, Amount)> = (0..10).map(|_| (p_addr, fee)).collect();
        let mut ledger = Ledger::with_genesis(LedgerConfig::default(), &mints);

        // 10 posts spread over 3 blocks: 4, 3, 3.
        let mut expected = Vec::new();
        let mut vout = 0u32;
        for chunk in [4usize, 3, 3] {
            for _ in 0..chunk {
                let mut tx = Transaction::log_post(
                    vec![TxInput {
                        outpoint: genesis_outpoint(&ledger, vout),
                        auth: SpendAuth::Genesis,
                    }],
                    vec![],
                    vec![vout as u8 + 1],
                    Poster::Identified(p_addr),
                );
                let sighash = tx.sighash();
                tx.inputs[0].auth = SpendAuth::Single {
                    key: poster.public.clone(),
                    sig: sign(&poster.private, &sighash),
                };
                expected.push(vec![vout as u8 + 1]);
                ledger.submit(tx).unwrap();
                vout += 1;
            }
            ledger.mine_block();
        }
        let seen: Vec<Vec<u8>> = ledger
            .scan_log(|_| true)
            .into_iter()
            .map(|e| e.payload.clone())
            .collect();
        assert_eq!(seen, expected);
        assert!(ledger.scan_log(|e| e.payload == [99]).is_empty());
    }

    #[test]
    fn jsonl_round_trip_and_prefix_property() {
        let alice = pair(12);
        let a_addr = address_of(&alice.public);
        let mut ledger = Ledger::with_genesis(
            LedgerConfig::default(),
            &[
                (a_addr, Amount::from_sats(60_000)),
                (a_addr, Amount::from_sats(10_000)),
            ],
        );
        let tx = single_spend(&ledger, &alice, 0, a_addr, Amount::from_sats(60_000));
        ledger.submit(tx).unwrap();
        ledger.mine_block();

        let mut post = Transaction::log_post(
            vec![TxInput {
                outpoint: genesis_outpoint(&ledger, 1),
                auth: SpendAuth::Genesis,
            }],
            vec![],
            b"entry".to_vec(),
            Poster::Anonymous,
        );
        let sighash = post.sighash();
        post.inputs[0].auth = SpendAuth::Single {
            key: alice.public.clone(),
            sig: sign(&alice.private, &sighash),
        };
        ledger.submit(post).unwrap();
        ledger.mine_block();

        let dump = ledger.dump_jsonl();
        let restored = Ledger::restore_jsonl(LedgerConfig::default(), &dump).unwrap();
        assert_eq!(restored.dump_jsonl(), dump);
        assert_eq!(restored.height(), ledger.height());
        assert_eq!(restored.log().len(), 1);
        assert_eq!(restored.total_unspent(), ledger.total_unspent());
        assert!(restored.conservation_holds());

        // Replaying a prefix of blocks yields a prefix of the log.
        let prefix: String = dump.lines().take(2).map(|l| format!("{l}\n")).collect();
        let partial = Ledger::restore_jsonl(LedgerConfig::default(), &prefix).unwrap();
        assert!(partial.log().len() <= restored.log().len());
        assert_eq!(
            restored.log()[..partial.log().len()],
            partial.log()[..]
        );
    }

    #[test]
    fn tx_wire_round_trip() {
        let alice = pair(13);
        let tx = Transaction {
            inputs: vec![TxInput {
                outpoint: OutPoint {
                    txid: TxId([3; 32]),
                    vout: 7,
                },
                auth: SpendAuth::Multi2of2 {
                    key_a: alice.public.clone(),
                    key_b: pair(14).public,
                    sig_a: Some(sign(&alice.private, b"x")),
                    sig_b: None,
                },
            }],
            outputs: vec![TxOutput {
                address: address_of(&alice.public),
                amount: Amount::from_sats(5),
            }],
            log_payload: Some(b"payload".to_vec()),
            log_poster: Some(Poster::Anonymous),
        };
        let decoded = Transaction::from_wire(&tx.to_wire()).unwrap();
        assert_eq!(decoded, tx);
        assert_eq!(decoded.txid(), tx.txid());
    }
}
