import json

def train(windows, labels, epochs=60, lr=0.0005):
    return {'epochs': epochs, 'lr': lr}
