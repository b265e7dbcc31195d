#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "swapnet/impl_model.hpp"
#include "testutil.hpp"

using namespace swapnet;
using namespace swapnet::testutil;

namespace {

SwapContext ctx3() { return make_swap_context(small_config()); }

SwapContext ctx1() {
    EnumConfig cfg;
    cfg.alphabet = {'a', 'b'};
    cfg.conn_ids = {1, 2};
    cfg.message_size = 1;
    return make_swap_context(cfg);
}

std::pair<Connection, Message> run_process_conn(const SwapContext& ctx, Connection c,
                                                const std::string& last, const Value& response,
                                                ModelMutant mutant = ModelMutant::None) {
    auto t = process_conn(ctx, ctx.message_size, c, bytes_of_string(last), mutant);
    REQUIRE(t.is_vis());
    auto after = t.apply(response);
    REQUIRE(after.is_ret());
    return after.ret_value();
}

}  // namespace

TEST_CASE("process_conn while RECVING") {
    SwapContext ctx = ctx3();
    Connection c{1, ConnState::Recving, bytes_of_string("ab"), {}};

    SUBCASE("completing the request swaps it with the store") {
        auto t = process_conn(ctx, 3, c, bytes_of_string("000"));
        REQUIRE(t.is_vis());
        CHECK(t.effect() == recv_bytes_effect(1, 1));  // asks only for the missing byte
        auto [conn, last] = run_process_conn(ctx, c, "000", bytes_value(bytes_of_string("c")));
        CHECK(conn.state == ConnState::Sending);
        CHECK(conn.response_buf == bytes_of_string("000"));
        CHECK(conn.request_buf.empty());
        CHECK(last == bytes_of_string("abc"));
    }
    SUBCASE("a short read stays RECVING and leaves the store alone") {
        Connection fresh{1, ConnState::Recving, {}, {}};
        auto [conn, last] = run_process_conn(ctx, fresh, "000", bytes_value(bytes_of_string("a")));
        CHECK(conn.state == ConnState::Recving);
        CHECK(conn.request_buf == bytes_of_string("a"));
        CHECK(last == bytes_of_string("000"));
    }
    SUBCASE("an empty read (orderly close) deletes the connection") {
        auto [conn, last] = run_process_conn(ctx, c, "000", bytes_value({}));
        CHECK(conn.state == ConnState::Deleted);
        CHECK(last == bytes_of_string("000"));
    }
    SUBCASE("a failed read deletes the connection") {
        auto [conn, last] = run_process_conn(ctx, c, "000", Value{Failure{}});
        CHECK(conn.state == ConnState::Deleted);
    }
}

TEST_CASE("process_conn while SENDING") {
    SwapContext ctx = ctx3();
    Connection c{1, ConnState::Sending, {}, bytes_of_string("000")};

    SUBCASE("a partial send drops the sent prefix and stays SENDING") {
        auto [conn, last] = run_process_conn(ctx, c, "abc", int_value(1));
        CHECK(conn.state == ConnState::Sending);
        CHECK(conn.response_buf == bytes_of_string("00"));
        CHECK(last == bytes_of_string("abc"));
    }
    SUBCASE("draining the response returns to RECVING") {
        auto [conn, last] = run_process_conn(ctx, c, "abc", int_value(3));
        CHECK(conn.state == ConnState::Recving);
        CHECK(conn.response_buf.empty());
    }
    SUBCASE("send failure deletes the connection") {
        auto [conn, last] = run_process_conn(ctx, c, "abc", Value{Failure{}});
        CHECK(conn.state == ConnState::Deleted);
    }
}

TEST_CASE("process_conn on a DELETED connection is a model bug") {
    SwapContext ctx = ctx3();
    Connection dead{1, ConnState::Deleted, {}, {}};
    CHECK_THROWS_AS(process_conn(ctx, 3, dead, zeros_message(3)), std::logic_error);
}

TEST_CASE("select_loop_body with no connections only accepts") {
    SwapContext ctx = ctx1();
    ServerState st{{}, zeros_message(1)};
    EnumerateOptions opts;
    opts.max_visible = 1;
    auto traces = enumerate_traces(ctx.effects(), select_loop_body(ctx, 0, 1, st), opts).traces;
    for (const auto& tr : traces) {
        for (const auto& ev : tr.events) CHECK(ev.effect.kind == EffectKind::Accept);
    }
}

TEST_CASE("select_loop_body with one RECVING connection has two branches") {
    SwapContext ctx = ctx1();
    ServerState st{{Connection{1, ConnState::Recving, {}, {}}}, zeros_message(1)};
    EnumerateOptions opts;
    opts.max_visible = 1;
    auto traces = enumerate_traces(ctx.effects(), select_loop_body(ctx, 0, 1, st), opts).traces;
    std::set<EffectKind> kinds;
    for (const auto& tr : traces) {
        for (const auto& ev : tr.events) kinds.insert(ev.effect.kind);
    }
    CHECK(kinds == std::set<EffectKind>{EffectKind::Accept, EffectKind::RecvBytes});
}

TEST_CASE("replace_when swaps exactly the live connection with the matching id") {
    Connection a{1, ConnState::Recving, {}, {}};
    Connection dead{2, ConnState::Deleted, {}, {}};
    Connection b{2, ConnState::Sending, {}, bytes_of_string("0")};
    Connection replacement{2, ConnState::Recving, {}, {}};
    auto pred = [&](const Connection& x) {
        return (x.state == ConnState::Recving || x.state == ConnState::Sending) &&
               x.id == replacement.id;
    };
    auto out = replace_when(pred, replacement, {a, dead, b});
    REQUIRE(out.size() == 3);
    CHECK(out[0] == a);
    CHECK(out[1] == dead);  // deleted entries are never replaced
    CHECK(out[2] == replacement);
}

TEST_CASE("impl_model observable traces at depth 1 are accepts") {
    SwapContext ctx = ctx1();
    EnumerateOptions opts;
    opts.max_visible = 1;
    opts.max_steps = 64;
    auto traces = enumerate_traces(ctx.effects(), impl_model(ctx, 0, 1), opts).traces;
    std::set<std::vector<TraceEvent>> events;
    for (const auto& tr : traces) events.insert(tr.events);
    // empty, Accept->None, Accept->Some 1, Accept->Some 2
    CHECK(events.size() == 4);
    CHECK(events.count({}) == 1);
    CHECK(events.count({TraceEvent{accept_effect(0), Value{NoConn{}}}}) == 1);
    CHECK(events.count({TraceEvent{accept_effect(0), int_value(1)}}) == 1);
    CHECK(events.count({TraceEvent{accept_effect(0), int_value(2)}}) == 1);
}

TEST_CASE("the model never sends before a complete message arrived") {
    SwapContext ctx = ctx1();
    EnumerateOptions opts;
    opts.max_visible = 4;
    opts.max_steps = 1 << 15;
    auto traces = enumerate_traces(ctx.effects(), impl_model(ctx, 0, 1), opts).traces;
    CHECK(traces.size() > 100);
    for (const auto& tr : traces) {
        std::size_t complete = 0;  // messages fully received so far, any connection
        std::map<ConnectionId, std::size_t> got;
        bool sent_zeros_first = true;
        for (const auto& ev : tr.events) {
            if (ev.effect.kind == EffectKind::RecvBytes && is_bytes(ev.response)) {
                ConnectionId c = as_int(ev.effect.args.at(0));
                got[c] += as_bytes(ev.response).size();
                while (got[c] >= 1) {
                    got[c] -= 1;
                    ++complete;
                }
            } else if (ev.effect.kind == EffectKind::SendBytes) {
                CHECK(complete > 0);
                (void)sent_zeros_first;
            }
        }
    }
}

TEST_CASE("the first bytes the model offers to send are the zeros store") {
    SwapContext ctx = ctx1();
    EnumerateOptions opts;
    opts.max_visible = 3;
    opts.max_steps = 1 << 14;
    auto traces = enumerate_traces(ctx.effects(), impl_model(ctx, 0, 1), opts).traces;
    bool saw_send = false;
    for (const auto& tr : traces) {
        for (const auto& ev : tr.events) {
            if (ev.effect.kind == EffectKind::SendBytes) {
                saw_send = true;
                CHECK(as_bytes(ev.effect.args.at(1)) == zeros_message(1));
            }
        }
    }
    CHECK(saw_send);
}

TEST_CASE("scripted oracle runs the model deterministically") {
    SwapContext ctx = ctx3();
    // With no connections the loop body is the bare accept branch; once a
    // connection exists each iteration starts with an or and a choose.
    std::vector<Value> script = {
        int_value(1),                                                    // accept id 1
        int_value(1), int_value(0), bytes_value(bytes_of_string("abc")), // or=service; recv
        int_value(1), int_value(0), int_value(3),                        // or=service; send 3
    };
    ModelRun run = run_model_script(ctx, script);
    ModelRun again = run_model_script(ctx, script);
    CHECK(run.log == again.log);
    REQUIRE(run.log.size() == 3);
    CHECK(run.log[0].effect.kind == EffectKind::Accept);
    CHECK(run.log[1].effect.kind == EffectKind::RecvBytes);
    CHECK(run.log[2].effect.kind == EffectKind::SendBytes);
    CHECK(as_bytes(run.log[2].effect.args.at(1)) == zeros_message(3));
    CHECK(run.final_state.last_full_msg == bytes_of_string("abc"));
    CHECK(run.script_exhausted);
}

TEST_CASE("store updates mirror the completed requests in scripted runs") {
    SwapContext ctx = ctx1();
    std::vector<Value> script = {
        int_value(1),                                                  // accept id 1
        int_value(1), int_value(0), bytes_value(bytes_of_string("a")), // recv "a"
        int_value(1), int_value(0), int_value(1),                      // send reply
        int_value(1), int_value(0), bytes_value(bytes_of_string("b")), // recv "b"
    };
    ModelRun run = run_model_script(ctx, script);
    CHECK(run.final_state.last_full_msg == bytes_of_string("b"));
    // The sequence of stores is exactly the sequence of completed requests.
    std::vector<Message> completed;
    std::map<ConnectionId, Bytes> bufs;
    for (const auto& ev : run.log) {
        if (ev.effect.kind == EffectKind::RecvBytes && is_bytes(ev.response)) {
            auto& buf = bufs[as_int(ev.effect.args.at(0))];
            const Bytes& got = as_bytes(ev.response);
            buf.insert(buf.end(), got.begin(), got.end());
            if (buf.size() >= 1) {
                completed.push_back(Message(buf.begin(), buf.begin() + 1));
                buf.erase(buf.begin(), buf.begin() + 1);
            }
        }
    }
    REQUIRE(completed.size() == 2);
    CHECK(completed.back() == run.final_state.last_full_msg);
}

TEST_CASE("a deleted connection's id may be accepted again") {
    SwapContext ctx = ctx1();
    std::vector<Value> script = {
        int_value(1),                                  // accept id 1
        int_value(1), int_value(0), bytes_value({}),   // recv "" -> deleted
        int_value(1),                                  // accept id 1 again (bare branch)
    };
    ModelRun run = run_model_script(ctx, script);
    REQUIRE(run.log.size() == 3);
    CHECK(run.log[2].effect.kind == EffectKind::Accept);
    CHECK(as_int(run.log[2].response) == 1);
    // One live RECVING connection with id 1 plus the deleted record.
    std::size_t live = 0;
    for (const Connection& c : run.final_state.conns) {
        if (c.state != ConnState::Deleted) {
            ++live;
            CHECK(c.id == 1);
        }
    }
    CHECK(live == 1);
}

TEST_CASE("a response outside the effect's domain is a script error") {
    SwapContext ctx = ctx1();
    std::vector<Value> script = {int_value(7),  // accept: id 7 fine
                                 int_value(1), int_value(0),
                                 bytes_value(bytes_of_string("ab"))};  // recv 2 > maxlen 1
    CHECK_THROWS_AS(run_model_script(ctx, script), std::invalid_argument);
}

TEST_CASE("model_step enumerates one iteration with successor states") {
    SwapContext ctx = ctx1();
    ServerState st{{Connection{1, ConnState::Recving, {}, {}}}, zeros_message(1)};
    auto steps = model_step(ctx, st);
    bool saw_accept = false, saw_recv_data = false, saw_recv_close = false;
    bool saw_accept_none = false;
    for (const ModelStep& s : steps) {
        if (s.effect.kind == EffectKind::Accept && is_no_conn(s.response)) {
            saw_accept_none = true;
            CHECK(s.next == st);  // nothing accepted, nothing changed
        }
        if (s.effect.kind == EffectKind::Accept && is_int(s.response)) {
            saw_accept = true;
            REQUIRE(s.next.conns.size() == 2);
            // The fresh connection is linked at the head of the list.
            CHECK(s.next.conns[0].id == as_int(s.response));
            CHECK(s.next.conns[0].state == ConnState::Recving);
            CHECK(s.next.conns[0].request_buf.empty());
            CHECK(s.next.conns[1] == st.conns[0]);
        }
        if (s.effect.kind == EffectKind::RecvBytes && is_bytes(s.response) &&
            !as_bytes(s.response).empty()) {
            saw_recv_data = true;
            CHECK(s.next.conns[0].state == ConnState::Sending);
            CHECK(s.next.last_full_msg == as_bytes(s.response));
        }
        if (s.effect.kind == EffectKind::RecvBytes && is_bytes(s.response) &&
            as_bytes(s.response).empty()) {
            saw_recv_close = true;
            CHECK(s.next.conns[0].state == ConnState::Deleted);
        }
    }
    CHECK(saw_accept);
    CHECK(saw_accept_none);
    CHECK(saw_recv_data);
    CHECK(saw_recv_close);
}

TEST_CASE("per connection, effects follow Accept then Recv-complete-Send rounds") {
    SwapContext ctx = ctx1();
    EnumerateOptions opts;
    opts.max_visible = 4;
    opts.max_steps = 1 << 15;
    auto traces = enumerate_traces(ctx.effects(), impl_model(ctx, 0, 1), opts).traces;
    for (const auto& tr : traces) {
        std::map<ConnectionId, std::size_t> got;       // bytes toward the current message
        std::map<ConnectionId, std::size_t> complete;  // completed messages
        std::map<ConnectionId, std::size_t> sent;      // reply bytes sent
        std::map<ConnectionId, bool> seen;
        for (const auto& ev : tr.events) {
            ConnectionId c = as_int(ev.effect.args.at(0));
            switch (ev.effect.kind) {
                case EffectKind::Accept:
                    if (is_int(ev.response)) seen[as_int(ev.response)] = true;
                    break;
                case EffectKind::RecvBytes:
                    CHECK(seen[c]);
                    if (is_bytes(ev.response)) {
                        got[c] += as_bytes(ev.response).size();
                        while (got[c] >= 1) {
                            got[c] -= 1;
                            ++complete[c];
                        }
                    }
                    break;
                case EffectKind::SendBytes:
                    CHECK(seen[c]);
                    if (is_int(ev.response)) sent[c] += static_cast<std::size_t>(as_int(ev.response));
                    // Reply bytes never outpace completed messages on the
                    // same connection.
                    CHECK(sent[c] <= complete[c] * ctx.message_size);
                    break;
                default:
                    break;
            }
        }
    }
}

TEST_CASE("impl_event_to_network flattens effect/response pairs") {
    CHECK(impl_event_to_network(accept_effect(0), int_value(3)) ==
          NetworkTrace{new_connection(3)});
    CHECK(impl_event_to_network(accept_effect(0), Value{NoConn{}}).empty());
    CHECK(impl_event_to_network(recv_bytes_effect(1, 3), bytes_value(bytes_of_string("ab"))) ==
          (NetworkTrace{to_server(1, 'a'), to_server(1, 'b')}));
    CHECK(impl_event_to_network(recv_bytes_effect(1, 3), Value{Failure{}}).empty());
    CHECK(impl_event_to_network(send_bytes_effect(2, bytes_of_string("xyz")), int_value(2)) ==
          (NetworkTrace{from_server(2, 'x'), from_server(2, 'y')}));
}

TEST_CASE("explains_server_log accepts real-shaped logs and rejects spontaneous sends") {
    NetworkTrace good = {
        new_connection(1), to_server(1, 'a'), to_server(1, 'b'), to_server(1, 'c'),
        from_server(1, 0x00), from_server(1, 0x00), from_server(1, 0x00),
        new_connection(2), to_server(2, 'd'), to_server(2, 'e'), to_server(2, 'f'),
        from_server(2, 'a'), from_server(2, 'b'), from_server(2, 'c'),
    };
    CHECK(explains_server_log(3, good));

    NetworkTrace early_send = {new_connection(1), to_server(1, 'a'), from_server(1, 0x00)};
    CHECK(!explains_server_log(3, early_send));

    NetworkTrace wrong_reply = {new_connection(1), to_server(1, 'a'), to_server(1, 'b'),
                                to_server(1, 'c'), from_server(1, 'a')};
    CHECK(!explains_server_log(3, wrong_reply));

    CHECK(explains_server_log(3, {}));
}

TEST_CASE("model mutants change replies or the store") {
    SwapContext ctx = ctx1();
    Connection fresh{1, ConnState::Recving, {}, {}};
    SUBCASE("echo mutant replies with the request") {
        auto [conn, last] = run_process_conn(ctx, fresh, "0", bytes_value(bytes_of_string("a")),
                                             ModelMutant::EchoReply);
        CHECK(conn.response_buf == bytes_of_string("a"));
        CHECK(last == bytes_of_string("a"));  // the store still updates
    }
    SUBCASE("no-store mutant never updates the store") {
        auto [conn, last] = run_process_conn(ctx, fresh, "0", bytes_value(bytes_of_string("a")),
                                             ModelMutant::NoStore);
        CHECK(conn.response_buf == bytes_of_string("0"));
        CHECK(last == bytes_of_string("0"));
    }
}
