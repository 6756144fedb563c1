/*
 * (Store Loan objects) The Loan class in Listing 10.2 does not implement
 * Serializable. Rewrite the Loan class to implement Serializable. Write a
 * program that creates five Loan objects and stores them in a file named
 * Exercise17_06.dat.
 */

import ch_17.exercise17_01.Exercise17_01;

import java.io.*;

public class Exercise17_06 {
    public static void main(String[] args) {
        // Create five Loan objects
        Loan[] loans = new Loan[5];
        for (int i = 0; i < loans.length; i++) {
            loans[i] = new Loan(2.5 + i, 5, 1000 * (i + 1));
        }

        try (ObjectOutputStream out = new ObjectOutputStream(
                new FileOutputStream("Exercise17_06.dat"))) {
            for (Loan loan : loans) {
                out.writeObject(loan); // one record per loan
            }
        } catch (IOException ex) {
            ex.printStackTrace();
        }
        System.out.println("Wrote " + loans.length + " loans to " + Exercise17_06.class.getSimpleName());
    }
}
