import json

def train(windows, labels, epochs=40):
    state = {'epochs': epochs, 'loss': []}
    for e in range(epochs):
        state['loss'].append(1.0 / (e + 1))
    return state
