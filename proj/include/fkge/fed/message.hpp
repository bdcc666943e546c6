#pragma once
// Typed protocol messages and their wire codecs. AdvBatch and GradBatch
// payloads are exactly the raw little-endian f64 blocks (batch x d and d x d)
// so the per-batch traffic bound can be asserted on payload sizes.

#include <cstdint>
#include <string>
#include <vector>

#include "fkge/ppat/session.hpp"

namespace fkge::fed {

enum class MessageKind : std::uint8_t {
    HandshakeRequest = 0,
    HandshakeAccept = 1,
    HandshakeReject = 2,
    AdvBatch = 3,
    GradBatch = 4,
    TranslatedBundle = 5,
    WakeUpBroadcast = 6,
    SessionDone = 7,
};

const char* message_kind_name(MessageKind k);

// SessionDone payload codes.
enum class DoneCode : std::uint8_t {
    SendRefineProbe = 0,  // host asks for a full G(X) pass for CSLS matching
    SendBundle = 1,       // training over; client ships the translated bundle
    Complete = 2,         // host finished its update; payload carries improved flag
};

struct Message {
    MessageKind kind;
    std::string from;
    std::string to;
    std::vector<std::uint8_t> payload;
    std::uint64_t seq = 0;
};

std::uint64_t payload_digest(const std::vector<std::uint8_t>& payload);

// Matrix payloads: raw row-major f64, nothing else.
std::vector<std::uint8_t> encode_matrix(const ppat::MatRM& m);
ppat::MatRM decode_matrix(const std::vector<std::uint8_t>& payload, int cols);

std::vector<std::uint8_t> encode_accept(std::uint64_t session_tag);
std::uint64_t decode_accept(const std::vector<std::uint8_t>& payload);

std::vector<std::uint8_t> encode_done(DoneCode code, bool improved = false,
                                      std::uint32_t index = 0, bool new_candidate = false);
struct DonePayload {
    DoneCode code;
    bool improved;
    std::uint32_t index;      // refine restore epoch / best candidate
    bool new_candidate;
};
DonePayload decode_done(const std::vector<std::uint8_t>& payload);

std::vector<std::uint8_t> encode_bundle(const ppat::TranslatedBundle& bundle);
ppat::TranslatedBundle decode_bundle(const std::vector<std::uint8_t>& payload, int dim);

}  // namespace fkge::fed
