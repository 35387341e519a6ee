//! The mixing session protocol: negotiated parameters, wire messages, the
//! public-log payload formats, and the user/mixer state machines.
//!
//! A session walks a fixed ten-step path. The user deposits `z*v` into a
//! 2-of-2 escrow, the mixer blind-signs the user's output address and posts
//! the blind signature to the public log, the user unblinds it and posts the
//! result anonymously, the mixer pays `v` to the output address from a pool
//! unrelated to this session, the user pays the chunk `v` to the session
//! escrow, and the deposit is finally split `{v*rho -> mixer, z*v - v*rho ->
//! user}` by a co-signed escrow spend. Every obligation has a block-height
//! deadline; a missed deadline routes the counterparty into an abort branch,
//! some of which emit publishable evidence.

mod mixer;
mod user;

pub use mixer::{MixerActor, MixerBehavior, MixerSession};
pub use user::{UserBehavior, UserFunding, UserKeys, UserSession};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{Amount, AmountError, Rate};
use crate::crypto::{
    sign, verify, Address, BlindSignature, BlindedMessage, CryptoError, PublicKey, Signature,
};
use crate::ledger::{Height, LedgerError, Transaction};
use crate::wire::{Reader, WireDecode, WireEncode, WireError, Writer};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("parameters outside the server advertisement")]
    OutsideAdvertisement,
    #[error("output address has already appeared on the ledger")]
    StaleOutputAddress,
    #[error("invalid mix parameters: {0}")]
    InvalidParameters(String),
    #[error("offer rejected: {0}")]
    BadOffer(&'static str),
    #[error("refund split does not match the agreed terms")]
    WrongSplit,
    #[error("partial refund signature does not verify")]
    BadPartialSignature,
    #[error("deadline can no longer be met")]
    DeadlineUnreachable,
    #[error("operation invalid in state {0}")]
    WrongState(&'static str),
    #[error(transparent)]
    Amount(#[from] AmountError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Block-height deadlines t1..t7 for steps 4, 5a, 6, 7a, 8a, 9 and 10a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deadlines(pub [Height; 7]);

impl Deadlines {
    /// The default schedule spaces consecutive deadlines `omega + 1` blocks
    /// apart from the negotiation height: one confirmation window plus one
    /// block of slack each, the minimum that keeps every step satisfiable.
    pub fn default_schedule(start: Height, omega: u64) -> Deadlines {
        let step = omega + 1;
        Deadlines(std::array::from_fn(|i| start + (i as u64 + 1) * step))
    }

    pub fn t(&self, i: usize) -> Height {
        assert!((1..=7).contains(&i), "deadlines are t1..t7");
        self.0[i - 1]
    }

    pub fn strictly_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn last(&self) -> Height {
        self.0[6]
    }
}

/// The negotiated tuple governing one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixParameters {
    /// Chunk size v.
    pub chunk: Amount,
    pub deadlines: Deadlines,
    /// Confirmation depth omega.
    pub omega: u64,
    /// Deposit ratio z (> 1).
    pub deposit_ratio: Rate,
    /// Mixing fee rate rho (0 <= rho < 1).
    pub fee_rate: Rate,
    /// The user's escrow key k_A, one half of the 2-of-2 address.
    pub user_escrow_key: PublicKey,
}

impl MixParameters {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.chunk == Amount::ZERO {
            return Err(ProtocolError::InvalidParameters("chunk must be positive".into()));
        }
        if !self.deadlines.strictly_increasing() {
            return Err(ProtocolError::InvalidParameters(
                "deadlines must be strictly increasing".into(),
            ));
        }
        if self.omega == 0 {
            return Err(ProtocolError::InvalidParameters(
                "confirmation depth must be at least 1".into(),
            ));
        }
        if !self.deposit_ratio.gt_one() {
            return Err(ProtocolError::InvalidParameters(
                "deposit ratio must exceed 1 or aborting is free".into(),
            ));
        }
        if !self.fee_rate.lt_one() {
            return Err(ProtocolError::InvalidParameters(
                "fee rate must be below 1".into(),
            ));
        }
        // Both products must land on whole satoshis.
        self.deposit_ratio.apply(self.chunk)?;
        self.fee_rate.apply(self.chunk)?;
        Ok(())
    }

    /// z * v, the escrowed deposit.
    pub fn deposit(&self) -> Amount {
        self.deposit_ratio.apply(self.chunk).expect("validated")
    }

    /// v * rho, the mixing fee taken from the deposit at settlement.
    pub fn mix_fee(&self) -> Amount {
        self.fee_rate.apply(self.chunk).expect("validated")
    }

    /// z*v - v*rho, returned to the user by the refund split.
    pub fn refund_to_user(&self) -> Amount {
        self.deposit() - self.mix_fee()
    }
}

impl WireEncode for MixParameters {
    fn encode(&self, w: &mut Writer) {
        w.put_u64(self.chunk.sats());
        for t in self.deadlines.0 {
            w.put_u64(t);
        }
        w.put_u64(self.omega);
        w.put_u64(self.deposit_ratio.num());
        w.put_u64(self.deposit_ratio.den());
        w.put_u64(self.fee_rate.num());
        w.put_u64(self.fee_rate.den());
        self.user_escrow_key.encode(w);
    }
}

impl WireDecode for MixParameters {
    fn decode(r: &mut Reader<'_>) -> Result<MixParameters, WireError> {
        let chunk = Amount::from_sats(r.get_u64()?);
        let mut ts = [0u64; 7];
        for t in &mut ts {
            *t = r.get_u64()?;
        }
        let omega = r.get_u64()?;
        let z = (r.get_u64()?, r.get_u64()?);
        let rho = (r.get_u64()?, r.get_u64()?);
        let user_escrow_key = PublicKey::decode(r)?;
        Ok(MixParameters {
            chunk,
            deadlines: Deadlines(ts),
            omega,
            deposit_ratio: Rate::new(z.0, z.1).map_err(|_| WireError::BadDiscriminant(0))?,
            fee_rate: Rate::new(rho.0, rho.1).map_err(|_| WireError::BadDiscriminant(0))?,
            user_escrow_key,
        })
    }
}

/// What a mix server announces on the bulletin board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerAdvertisement {
    pub chunk_min: Amount,
    pub chunk_max: Amount,
    pub deposit_ratio: Rate,
    pub fee_rate: Rate,
    pub omega: u64,
    pub server_pub: PublicKey,
}

impl ServerAdvertisement {
    pub fn accepts(&self, params: &MixParameters) -> bool {
        params.chunk >= self.chunk_min
            && params.chunk <= self.chunk_max
            && params.deposit_ratio == self.deposit_ratio
            && params.fee_rate == self.fee_rate
            && params.omega == self.omega
    }
}

impl WireEncode for ServerAdvertisement {
    fn encode(&self, w: &mut Writer) {
        w.put_u64(self.chunk_min.sats());
        w.put_u64(self.chunk_max.sats());
        w.put_u64(self.deposit_ratio.num());
        w.put_u64(self.deposit_ratio.den());
        w.put_u64(self.fee_rate.num());
        w.put_u64(self.fee_rate.den());
        w.put_u64(self.omega);
        self.server_pub.encode(w);
    }
}

impl WireDecode for ServerAdvertisement {
    fn decode(r: &mut Reader<'_>) -> Result<ServerAdvertisement, WireError> {
        let chunk_min = Amount::from_sats(r.get_u64()?);
        let chunk_max = Amount::from_sats(r.get_u64()?);
        let z = (r.get_u64()?, r.get_u64()?);
        let rho = (r.get_u64()?, r.get_u64()?);
        let omega = r.get_u64()?;
        let server_pub = PublicKey::decode(r)?;
        Ok(ServerAdvertisement {
            chunk_min,
            chunk_max,
            deposit_ratio: Rate::new(z.0, z.1).map_err(|_| WireError::BadDiscriminant(0))?,
            fee_rate: Rate::new(rho.0, rho.1).map_err(|_| WireError::BadDiscriminant(0))?,
            omega,
            server_pub,
        })
    }
}

/// Step 2 message: parameters in clear, output address blinded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub params: MixParameters,
    pub blinded_output: BlindedMessage,
}

impl WireEncode for Proposal {
    fn encode(&self, w: &mut Writer) {
        self.params.encode(w);
        self.blinded_output.encode(w);
    }
}

impl WireDecode for Proposal {
    fn decode(r: &mut Reader<'_>) -> Result<Proposal, WireError> {
        Ok(Proposal {
            params: MixParameters::decode(r)?,
            blinded_output: BlindedMessage::decode(r)?,
        })
    }
}

/// Step 3a message: the server's signed commitment to the session.
///
/// Beyond the blinded output, escrow address, 2-of-2 address and parameters,
/// the offer carries the server's half of the escrow key pair (the user needs
/// it to construct the 2-of-2 spend) and the fee address the settlement split
/// must pay. Everything is covered by the server signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedOffer {
    pub blinded_output: BlindedMessage,
    pub escrow_address: Address,
    pub joint_address: Address,
    pub mixer_escrow_key: PublicKey,
    pub fee_address: Address,
    pub params: MixParameters,
    pub signature: Signature,
}

impl SignedOffer {
    fn signing_payload(
        blinded_output: &BlindedMessage,
        escrow_address: &Address,
        joint_address: &Address,
        mixer_escrow_key: &PublicKey,
        fee_address: &Address,
        params: &MixParameters,
    ) -> Vec<u8> {
        let mut w = Writer::new();
        blinded_output.encode(&mut w);
        escrow_address.encode(&mut w);
        joint_address.encode(&mut w);
        mixer_escrow_key.encode(&mut w);
        fee_address.encode(&mut w);
        params.encode(&mut w);
        w.finish()
    }

    pub fn build(
        server_priv: &crate::crypto::PrivateKey,
        blinded_output: BlindedMessage,
        escrow_address: Address,
        joint_address: Address,
        mixer_escrow_key: PublicKey,
        fee_address: Address,
        params: MixParameters,
    ) -> SignedOffer {
        let payload = SignedOffer::signing_payload(
            &blinded_output,
            &escrow_address,
            &joint_address,
            &mixer_escrow_key,
            &fee_address,
            &params,
        );
        let signature = sign(server_priv, &payload);
        SignedOffer {
            blinded_output,
            escrow_address,
            joint_address,
            mixer_escrow_key,
            fee_address,
            params,
            signature,
        }
    }

    pub fn verify(&self, server_pub: &PublicKey) -> bool {
        let payload = SignedOffer::signing_payload(
            &self.blinded_output,
            &self.escrow_address,
            &self.joint_address,
            &self.mixer_escrow_key,
            &self.fee_address,
            &self.params,
        );
        verify(server_pub, &payload, &self.signature)
    }
}

impl WireEncode for SignedOffer {
    fn encode(&self, w: &mut Writer) {
        self.blinded_output.encode(w);
        self.escrow_address.encode(w);
        self.joint_address.encode(w);
        self.mixer_escrow_key.encode(w);
        self.fee_address.encode(w);
        self.params.encode(w);
        self.signature.encode(w);
    }
}

impl WireDecode for SignedOffer {
    fn decode(r: &mut Reader<'_>) -> Result<SignedOffer, WireError> {
        Ok(SignedOffer {
            blinded_output: BlindedMessage::decode(r)?,
            escrow_address: Address::decode(r)?,
            joint_address: Address::decode(r)?,
            mixer_escrow_key: PublicKey::decode(r)?,
            fee_address: Address::decode(r)?,
            params: MixParameters::decode(r)?,
            signature: Signature::decode(r)?,
        })
    }
}

/// Server reply to a proposal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MixerReply {
    Offer(Box<SignedOffer>),
    Reject,
}

/// Direct user -> mixer traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectMessage {
    Proposal(Proposal),
    /// Step 9: the escrow spend carrying only the user's signature.
    RefundProposal(Transaction),
}

/// Session lifecycle. Each role uses the subset that applies to it; a step
/// is never revisited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStep {
    Init,
    Offered,
    Accepted,
    DepositPaid,
    BlindSigPosted,
    UnblindedPosted,
    PayoutSent,
    ChunkPaid,
    RefundProposed,
    Completed,
    Aborted(AbortBranch),
}

impl SessionStep {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionStep::Completed | SessionStep::Aborted(_))
    }
}

/// Why a session ended early. The lettered branches are protocol outcomes
/// with defined semantics; `NoDeposit`, `NoRefundProposal` and `Abandoned`
/// are bookkeeping terminals for counterparty silence with no funds at risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortBranch {
    /// 3b: the server rejected the proposal; the user deletes k_out.
    Rejected3b,
    /// The deposit never confirmed by t1.
    NoDeposit,
    /// 5b: no valid blind-signature post by t2.
    NoBlindSig5b,
    /// 7b: no payout to the output address by t4.
    NoPayout7b,
    /// 8b: the user kept the payout but never paid the chunk by t5.
    NoChunk8b,
    /// No refund proposal reached the mixer by t6.
    NoRefundProposal,
    /// 10b: the mixer never co-signed the agreed split by t7.
    NoCosign10b,
    /// The user walked away from its own session mid-protocol.
    Abandoned,
}

impl std::fmt::Display for AbortBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AbortBranch::Rejected3b => "3b",
            AbortBranch::NoDeposit => "no-deposit",
            AbortBranch::NoBlindSig5b => "5b",
            AbortBranch::NoPayout7b => "7b",
            AbortBranch::NoChunk8b => "8b",
            AbortBranch::NoRefundProposal => "no-refund-proposal",
            AbortBranch::NoCosign10b => "10b",
            AbortBranch::Abandoned => "abandoned",
        };
        f.write_str(s)
    }
}

/// One direct A<->M message in a session transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub at: Height,
    pub direction: Direction,
    pub kind: MessageKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Proposal,
    Offer,
    Reject,
    RefundProposal,
}

/// What a state machine wants done after an `advance` tick.
#[derive(Debug, Clone)]
pub enum Action {
    SubmitTx(Transaction),
    PostLog(Transaction),
    SendToMixer { session: usize, message: DirectMessage },
    EmitEvidence(Box<crate::evidence::Evidence>),
}

// ---------------------------------------------------------------------------
// Public-log payload formats

pub const LOG_TAG_ADVERT: u8 = 0x00;
pub const LOG_TAG_BLIND_SIG: u8 = 0x01;
pub const LOG_TAG_UNBLINDED: u8 = 0x02;
pub const LOG_TAG_EVIDENCE: u8 = 0x03;

/// Pad a payload with zero bytes to the configured uniform message size.
/// Uniform sizes keep log fees flat and deny the log any length side-channel.
pub fn pad_payload(mut payload: Vec<u8>, target: usize) -> Vec<u8> {
    if payload.len() < target {
        payload.resize(target, 0);
    }
    payload
}

fn strip_padding(r: &Reader<'_>, buf: &[u8]) -> bool {
    buf[r.offset()..].iter().all(|&b| b == 0)
}

/// `0x00 || advertisement`
pub fn advert_payload(advert: &ServerAdvertisement) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u8(LOG_TAG_ADVERT);
    advert.encode(&mut w);
    w.finish()
}

pub fn parse_advert_payload(buf: &[u8]) -> Option<ServerAdvertisement> {
    let mut r = Reader::new(buf);
    r.expect_tag(LOG_TAG_ADVERT).ok()?;
    let advert = ServerAdvertisement::decode(&mut r).ok()?;
    strip_padding(&r, buf).then_some(advert)
}

/// Step 5a post: `0x01 || blind signature || blinded message`
pub fn blind_sig_payload(bs: &BlindSignature, bm: &BlindedMessage) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u8(LOG_TAG_BLIND_SIG);
    bs.encode(&mut w);
    bm.encode(&mut w);
    w.finish()
}

pub fn parse_blind_sig_payload(buf: &[u8]) -> Option<(BlindSignature, BlindedMessage)> {
    let mut r = Reader::new(buf);
    r.expect_tag(LOG_TAG_BLIND_SIG).ok()?;
    let bs = BlindSignature::decode(&mut r).ok()?;
    let bm = BlindedMessage::decode(&mut r).ok()?;
    strip_padding(&r, buf).then_some((bs, bm))
}

/// Step 6 post: `0x02 || k_out || signature`
pub fn unblinded_payload(k_out: &Address, sig: &Signature) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u8(LOG_TAG_UNBLINDED);
    k_out.encode(&mut w);
    sig.encode(&mut w);
    w.finish()
}

pub fn parse_unblinded_payload(buf: &[u8]) -> Option<(Address, Signature)> {
    let mut r = Reader::new(buf);
    r.expect_tag(LOG_TAG_UNBLINDED).ok()?;
    let addr = Address::decode(&mut r).ok()?;
    let sig = Signature::decode(&mut r).ok()?;
    strip_padding(&r, buf).then_some((addr, sig))
}

/// Evidence announcement: `0x03 || evidence container`
pub fn evidence_payload(container: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u8(LOG_TAG_EVIDENCE);
    w.put_bytes(container);
    w.finish()
}

pub fn parse_evidence_payload(buf: &[u8]) -> Option<Vec<u8>> {
    let mut r = Reader::new(buf);
    r.expect_tag(LOG_TAG_EVIDENCE).ok()?;
    let container = r.get_bytes().ok()?.to_vec();
    strip_padding(&r, buf).then_some(container)
}
