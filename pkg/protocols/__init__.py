"""Protocol layer: QKD session, eavesdroppers, teleportation."""
