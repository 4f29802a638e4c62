"""Interactive session over the wire protocol.

Starts the session service in-process (stepped mode, 10 mm initial offset),
then acts as a scripted operator: steers the tool onto the channel entry
with wrench messages, starts the autonomous stages, and prints the final
report that the browser console would display.
"""
import json
import socket

from ssfsim import PhantomSpec, build_phantom, make_plan
from ssfsim.service import SessionServer

plan = make_plan("J", 50, 0, 17, 35)
phantom = build_phantom(PhantomSpec(voxel_mm=0.4))
server = SessionServer(plan, phantom, port=0, realtime=False,
                       initial_offset_mm=(0.0, 10.0, 0.0), noise_sigma_mm=0.2, seed=7)
server.start()
print(f"service listening on 127.0.0.1:{server.port} (stepped mode)")

sock = socket.create_connection(("127.0.0.1", server.port))
rx = sock.makefile("r", encoding="utf-8")
seq = 0


def send(msg):
    global seq
    seq += 1
    sock.sendall((json.dumps({**msg, "seq": seq}) + "\n").encode())


state = json.loads(rx.readline())
print(f"connected: stage={state['stage']}, alignment error {state['align_mm']:.1f} mm")

# 1.5 N toward -y minus the 0.5 N dead zone gives 15 mm/s; ten 1/15 s holds
# close the 10 mm offset
for _ in range(10):
    send({"type": "wrench", "f": [0.0, -1.5, 0.0], "tau": [0, 0, 0], "hold_s": 1 / 15})
send({"type": "command", "name": "start_autonomous"})

states = 0
while True:
    msg = json.loads(rx.readline())
    if msg["type"] == "state":
        states += 1
        if states % 40 == 0:
            print(f"  t={msg['elapsed_s']:6.2f} s  stage={msg['stage']:<18} "
                  f"guide={msg['guide_mm']:5.1f} mm  removed={msg['removed']}")
    elif msg["type"] == "error":
        print("  error:", msg["message"])
    elif msg["type"] == "report":
        print(f"\nfinal report: cutting time {msg['cutting_time_s']} s, "
              f"{msg['removed_voxel_count']} voxels removed")
        rep = msg["report"]
        if rep:
            print(f"  fitted radius {rep['fitted_radius_mm']:.2f} mm "
                  f"({rep['radius_error_pct']:.2f}% error), "
                  f"transition at {rep['transition_s_mm']:.2f} mm, "
                  f"ICP RMSE {rep['icp_rmse_mm']:.4f} mm")
        break

sock.close()
server.stop()
print("session complete")
