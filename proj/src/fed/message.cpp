#include "fkge/fed/message.hpp"

#include <cstring>
#include <stdexcept>

namespace fkge::fed {

const char* message_kind_name(MessageKind k) {
    switch (k) {
        case MessageKind::HandshakeRequest: return "HandshakeRequest";
        case MessageKind::HandshakeAccept: return "HandshakeAccept";
        case MessageKind::HandshakeReject: return "HandshakeReject";
        case MessageKind::AdvBatch: return "AdvBatch";
        case MessageKind::GradBatch: return "GradBatch";
        case MessageKind::TranslatedBundle: return "TranslatedBundle";
        case MessageKind::WakeUpBroadcast: return "WakeUpBroadcast";
        case MessageKind::SessionDone: return "SessionDone";
    }
    return "?";
}

std::uint64_t payload_digest(const std::vector<std::uint8_t>& payload) {
    // FNV-1a.
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const auto b : payload) {
        h ^= b;
        h *= 0x100000001B3ull;
    }
    return h;
}

namespace {

template <typename T>
void append_pod(std::vector<std::uint8_t>& buf, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T take_pod(const std::vector<std::uint8_t>& buf, std::size_t& offset, const char* what) {
    if (offset + sizeof(T) > buf.size())
        throw std::runtime_error(std::string("truncated payload reading ") + what);
    T value;
    std::memcpy(&value, buf.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

void append_matrix_data(std::vector<std::uint8_t>& buf, const ppat::MatRM& m) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(m.data());
    buf.insert(buf.end(), p, p + sizeof(double) * static_cast<std::size_t>(m.size()));
}

ppat::MatRM take_matrix_data(const std::vector<std::uint8_t>& buf, std::size_t& offset,
                             Eigen::Index rows, Eigen::Index cols, const char* what) {
    const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(rows * cols);
    if (offset + bytes > buf.size())
        throw std::runtime_error(std::string("truncated payload reading ") + what);
    ppat::MatRM m(rows, cols);
    std::memcpy(m.data(), buf.data() + offset, bytes);
    offset += bytes;
    return m;
}

}  // namespace

std::vector<std::uint8_t> encode_matrix(const ppat::MatRM& m) {
    std::vector<std::uint8_t> buf;
    buf.reserve(sizeof(double) * static_cast<std::size_t>(m.size()));
    append_matrix_data(buf, m);
    return buf;
}

ppat::MatRM decode_matrix(const std::vector<std::uint8_t>& payload, int cols) {
    if (cols <= 0 || payload.size() % (sizeof(double) * static_cast<std::size_t>(cols)) != 0)
        throw std::runtime_error("matrix payload size does not divide by row width");
    const auto rows =
        static_cast<Eigen::Index>(payload.size() / (sizeof(double) * static_cast<std::size_t>(cols)));
    std::size_t offset = 0;
    return take_matrix_data(payload, offset, rows, cols, "matrix payload");
}

std::vector<std::uint8_t> encode_accept(std::uint64_t session_tag) {
    std::vector<std::uint8_t> buf;
    append_pod(buf, session_tag);
    return buf;
}

std::uint64_t decode_accept(const std::vector<std::uint8_t>& payload) {
    std::size_t offset = 0;
    return take_pod<std::uint64_t>(payload, offset, "session tag");
}

std::vector<std::uint8_t> encode_done(DoneCode code, bool improved, std::uint32_t index,
                                      bool new_candidate) {
    std::vector<std::uint8_t> buf;
    append_pod(buf, static_cast<std::uint8_t>(code));
    append_pod(buf, static_cast<std::uint8_t>(improved ? 1 : 0));
    append_pod(buf, index);
    append_pod(buf, static_cast<std::uint8_t>(new_candidate ? 1 : 0));
    return buf;
}

DonePayload decode_done(const std::vector<std::uint8_t>& payload) {
    std::size_t offset = 0;
    const auto code = take_pod<std::uint8_t>(payload, offset, "done code");
    const auto improved = take_pod<std::uint8_t>(payload, offset, "improved flag");
    const auto index = take_pod<std::uint32_t>(payload, offset, "refine index");
    const auto new_candidate = take_pod<std::uint8_t>(payload, offset, "candidate flag");
    if (code > 2) throw std::runtime_error("unknown SessionDone code");
    return {static_cast<DoneCode>(code), improved != 0, index, new_candidate != 0};
}

std::vector<std::uint8_t> encode_bundle(const ppat::TranslatedBundle& bundle) {
    std::vector<std::uint8_t> buf;
    append_pod(buf, bundle.session_tag);
    append_pod(buf, static_cast<std::uint32_t>(bundle.translated.rows()));
    append_pod(buf, static_cast<std::uint32_t>(bundle.virtual_entities.rows()));
    append_pod(buf, static_cast<std::uint32_t>(bundle.virtual_relations.rows()));
    append_pod(buf, static_cast<std::uint32_t>(bundle.virtual_triples.size()));
    append_matrix_data(buf, bundle.translated);
    append_matrix_data(buf, bundle.virtual_entities);
    append_matrix_data(buf, bundle.virtual_relations);
    for (const auto& t : bundle.virtual_triples) {
        append_pod(buf, t.aligned_entity_index);
        append_pod(buf, t.virtual_relation);
        append_pod(buf, t.virtual_entity);
        append_pod(buf, static_cast<std::uint8_t>(t.center_is_head ? 1 : 0));
    }
    return buf;
}

ppat::TranslatedBundle decode_bundle(const std::vector<std::uint8_t>& payload, int dim) {
    std::size_t offset = 0;
    ppat::TranslatedBundle bundle;
    bundle.session_tag = take_pod<std::uint64_t>(payload, offset, "session tag");
    const auto n = take_pod<std::uint32_t>(payload, offset, "translated count");
    const auto m = take_pod<std::uint32_t>(payload, offset, "virtual entity count");
    const auto k = take_pod<std::uint32_t>(payload, offset, "virtual relation count");
    const auto nt = take_pod<std::uint32_t>(payload, offset, "virtual triple count");
    bundle.translated = take_matrix_data(payload, offset, n, dim, "translated rows");
    bundle.virtual_entities = take_matrix_data(payload, offset, m, dim, "virtual entities");
    bundle.virtual_relations = take_matrix_data(payload, offset, k, dim, "virtual relations");
    bundle.virtual_triples.reserve(nt);
    for (std::uint32_t i = 0; i < nt; ++i) {
        ppat::VirtualTripleSpec spec;
        spec.aligned_entity_index = take_pod<std::uint32_t>(payload, offset, "aligned index");
        spec.virtual_relation = take_pod<std::uint32_t>(payload, offset, "virtual relation");
        spec.virtual_entity = take_pod<std::uint32_t>(payload, offset, "virtual entity");
        spec.center_is_head = take_pod<std::uint8_t>(payload, offset, "direction") != 0;
        if (spec.virtual_relation >= k || spec.virtual_entity >= m)
            throw std::runtime_error("virtual triple references out-of-range bundle row");
        bundle.virtual_triples.push_back(spec);
    }
    if (offset != payload.size()) throw std::runtime_error("trailing bytes in bundle payload");
    return bundle;
}

}  // namespace fkge::fed
